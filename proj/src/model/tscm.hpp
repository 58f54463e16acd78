#pragma once

#include <string>
#include <vector>

#include "model/config.hpp"
#include "model/params.hpp"
#include "model/vit.hpp"

namespace tscnet::model {

struct BranchConv {
  int kh;
  int kw;
  int dilation;
  int pad_h;
  int pad_w;
};

// Conv stacks of the four multi-scale branches, in order: branch 1 is a single
// 1x1 conv, branch j >= 2 is (1 x k, k x 1, 3 x 3 dilated by k) with k = 2j - 1.
std::vector<std::vector<BranchConv>> msp_branch_schedule();

std::string tscm_prefix(int level);
inline const char* kSharedVit = "tscm.shared_vit";

VitConfig vit_config(const ModelConfig& cfg);

void append_tscm_specs(const ModelConfig& cfg, std::vector<ParamSpec>& specs);

template <typename T>
struct PauOutput {
  Tensor<T> f_pau;
  Tensor<T> f_jca;
  Tensor<T> channel_map;  // c
  Tensor<T> spatial_map;  // 1 x h x w, already upsampled
};

template <typename T>
PauOutput<T> pau(const Tensor<T>& f_b, const Tensor<T>& f_s, const ParamStore<T>& p,
                 const std::string& prefix);

template <typename T>
struct TruOutput {
  Tensor<T> f_tru;
  Tensor<T> f_hat_pau;
  Tensor<T> f_sp;
};

template <typename T>
TruOutput<T> tru(const Tensor<T>& f_pau, const Tensor<T>& f_t, const ParamStore<T>& p,
                 const std::string& prefix);

// Multi-scale perception: the four branches concatenated and fused by a 1x1 conv.
template <typename T>
Tensor<T> msp(const Tensor<T>& f_in, const ParamStore<T>& p, const std::string& prefix,
              std::vector<Tensor<T>>* branches = nullptr);

// An undefined f_jca (PAU disabled) makes the unit consume f_b alone.
template <typename T>
Tensor<T> riu(const Tensor<T>& f_jca, const Tensor<T>& f_b, const ModelConfig& cfg, const ParamStore<T>& p,
              const std::string& prefix);

// f_b at the level's resolution, f_t the texture level, f_s the semantic level.
// Returns c x 2h x 2w.
template <typename T>
Tensor<T> tscm_forward(int level, const Tensor<T>& f_b, const Tensor<T>& f_t, const Tensor<T>& f_s,
                       const ModelConfig& cfg, const ParamStore<T>& p);

}  // namespace tscnet::model
