#include "train/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "core/error.hpp"

namespace tscnet::train {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'C', 'N', '0', '0', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t crc_of(const std::string& bytes, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw DataError("checkpoint is truncated");
  }

  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const model::ParamStore<float>& params) {
  std::string out(kMagic, sizeof kMagic);
  for (const auto& [name, t] : params) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.dims()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  put_u32(out, crc_of(out, out.size()));
  return out;
}

void save_checkpoint(const std::string& path, const model::ParamStore<float>& params) {
  const std::string bytes = serialize_checkpoint(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

std::vector<CheckpointRecord> parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw DataError("not a TSCN0001 checkpoint");
  }
  const std::size_t body = bytes.size() - 4;
  Reader crc_reader(bytes, bytes.size());
  crc_reader.seek(body);
  if (crc_reader.u32() != crc_of(bytes, body)) throw DataError("checkpoint CRC mismatch");

  Reader r(bytes, body);
  r.seek(sizeof kMagic);
  std::vector<CheckpointRecord> out;
  while (r.pos() < body) {
    CheckpointRecord rec;
    rec.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank < 1 || rank > 4) throw DataError("checkpoint record '" + rec.name + "' has rank " + std::to_string(rank));
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t d = r.u32();
      if (d == 0 || d > (1u << 28)) throw DataError("checkpoint record '" + rec.name + "' has a bad dimension");
      rec.dims.push_back(static_cast<int>(d));
      n *= d;
    }
    if (n > (body - r.pos()) / 4) throw DataError("checkpoint is truncated");
    rec.values.resize(n);
    for (float& v : rec.values) v = std::bit_cast<float>(r.u32());
    out.push_back(std::move(rec));
  }
  return out;
}

template <typename T>
model::ParamStore<T> params_from_bytes(const std::string& bytes, const model::ModelConfig& cfg) {
  const auto records = parse_checkpoint(bytes);
  std::map<std::string, const CheckpointRecord*> by_name;
  for (const auto& r : records) by_name[r.name] = &r;
  std::ostringstream diff;
  model::ParamStore<T> out;
  std::map<std::string, bool> expected;
  for (const auto& spec : model::param_specs(cfg)) {
    expected[spec.name] = true;
    auto it = by_name.find(spec.name);
    if (it == by_name.end()) {
      diff << "\n  missing: " << spec.name << " " << core::dims_to_string(spec.dims);
      continue;
    }
    if (it->second->dims != spec.dims) {
      diff << "\n  shape mismatch: " << spec.name << " checkpoint " << core::dims_to_string(it->second->dims)
           << " vs model " << core::dims_to_string(spec.dims);
      continue;
    }
    std::vector<T> values(it->second->values.begin(), it->second->values.end());
    out.insert(spec.name, core::Tensor<T>::from_values(spec.dims, std::move(values), true));
  }
  for (const auto& r : records)
    if (!expected.count(r.name)) diff << "\n  unexpected: " << r.name << " " << core::dims_to_string(r.dims);
  if (!diff.str().empty()) throw DataError("checkpoint does not match the model configuration:" + diff.str());
  return out;
}

template <typename T>
model::ParamStore<T> load_checkpoint(const std::string& path, const model::ModelConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return params_from_bytes<T>(buf.str(), cfg);
  } catch (const DataError& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

template model::ParamStore<float> params_from_bytes<float>(const std::string&, const model::ModelConfig&);
template model::ParamStore<double> params_from_bytes<double>(const std::string&, const model::ModelConfig&);
template model::ParamStore<float> load_checkpoint<float>(const std::string&, const model::ModelConfig&);
template model::ParamStore<double> load_checkpoint<double>(const std::string&, const model::ModelConfig&);

}  // namespace tscnet::train
