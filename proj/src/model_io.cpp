#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sensoropt/errors.hpp"
#include "sensoropt/neuralnet.hpp"

namespace sensoropt {

namespace {

constexpr char kMagic[8] = {'S', 'O', 'P', 'T', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kMaxLayers = 1024;
constexpr std::uint32_t kMaxWidth = 1u << 20;

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail(ErrorKind::Load, "model file is truncated");
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model) {
  model.config.validate();
  model.params.check_shapes(model.config);
  model.norm.validate();

  Writer p;
  p.u64(model.config.hash());
  p.u32(static_cast<std::uint32_t>(model.config.layer_sizes.size()));
  for (std::size_t s : model.config.layer_sizes) p.u32(static_cast<std::uint32_t>(s));
  p.f64(model.config.leaky_slope);
  p.u32(static_cast<std::uint32_t>(model.config.output_activation));
  p.f64(model.norm.log_base);
  for (double v : model.norm.input_max) p.f64(v);
  for (double v : model.norm.output_max) p.f64(v);
  for (const Layer& layer : model.params.layers) {
    p.u32(static_cast<std::uint32_t>(layer.weights.rows()));
    p.u32(static_cast<std::uint32_t>(layer.weights.cols()));
    for (double w : layer.weights.data()) p.f64(w);
    for (double b : layer.bias) p.f64(b);
  }

  Writer out;
  out.bytes({reinterpret_cast<const std::uint8_t*>(kMagic), sizeof kMagic});
  out.u32(kFormatVersion);
  out.u64(p.buffer().size());
  out.bytes(p.buffer());
  out.u64(fnv1a(p.buffer()));
  return std::move(out.buffer());
}

Model deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(sizeof kMagic);
  if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) fail(ErrorKind::Load, "not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    fail(ErrorKind::Load, "unsupported model format version " + std::to_string(version) + " (expected " +
                              std::to_string(kFormatVersion) + ")");
  const std::uint64_t payload_len = r.u64();
  if (payload_len > r.remaining()) fail(ErrorKind::Load, "model file is truncated");
  const auto payload = r.take(static_cast<std::size_t>(payload_len));
  const std::uint64_t checksum = r.u64();
  if (r.remaining() != 0) fail(ErrorKind::Load, "trailing bytes after model payload");
  if (checksum != fnv1a(payload)) fail(ErrorKind::Load, "model checksum mismatch (corrupt file)");

  Reader p(payload);
  Model m;
  const std::uint64_t stored_hash = p.u64();
  const std::uint32_t n_sizes = p.u32();
  if (n_sizes < 2 || n_sizes > kMaxLayers) fail(ErrorKind::Load, "implausible layer count");
  m.config.layer_sizes.clear();
  for (std::uint32_t i = 0; i < n_sizes; ++i) {
    const std::uint32_t s = p.u32();
    if (s == 0 || s > kMaxWidth) fail(ErrorKind::Load, "implausible layer width");
    m.config.layer_sizes.push_back(s);
  }
  m.config.leaky_slope = p.f64();
  m.config.output_activation = static_cast<OutputActivation>(p.u32());
  try {
    m.config.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Load, std::string("invalid network config: ") + e.what());
  }
  if (m.config.hash() != stored_hash) fail(ErrorKind::Load, "config hash mismatch");

  m.norm.log_base = p.f64();
  for (double& v : m.norm.input_max) v = p.f64();
  for (double& v : m.norm.output_max) v = p.f64();
  try {
    m.norm.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Load, std::string("invalid normalization: ") + e.what());
  }

  for (std::size_t l = 1; l < m.config.layer_sizes.size(); ++l) {
    const std::uint32_t rows = p.u32();
    const std::uint32_t cols = p.u32();
    if (rows != m.config.layer_sizes[l] || cols != m.config.layer_sizes[l - 1])
      fail(ErrorKind::Load, "layer " + std::to_string(l) + " shape does not match config");
    Layer layer{Matrix(rows, cols), std::vector<double>(rows)};
    for (double& w : layer.weights.data()) w = p.f64();
    for (double& b : layer.bias) b = p.f64();
    m.params.layers.push_back(std::move(layer));
  }
  if (p.remaining() != 0) fail(ErrorKind::Load, "unexpected bytes after last layer");
  if (!m.params.all_finite()) fail(ErrorKind::Load, "non-finite parameter in model file");
  return m;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace sensoropt
