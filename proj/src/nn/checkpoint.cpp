#include "rul2stage/nn/checkpoint.hpp"

#include "rul2stage/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

namespace rul2stage::nn {

namespace {

constexpr std::size_t kMagicSize = sizeof(kCheckpointMagic) - 1;

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  const std::uint8_t* take(std::size_t n) {
    if (n > in_.size() - pos_) throw LoadError("checkpoint is truncated");
    const auto* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  int i32() {
    const auto v = u32();
    if (v > 1u << 24) throw LoadError("checkpoint field out of range");
    return static_cast<int>(v);
  }
  std::size_t position() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::validate() const {
  spec.validate();
  if (selection.size() != spec.n_steps) {
    throw ShapeError("checkpoint selects " + std::to_string(selection.size()) +
                     " channels but the model has " + std::to_string(spec.n_steps) + " input steps");
  }
  for (const auto c : selection.channels()) stats.at(c);
  if (window_step < 1) throw ConfigError("checkpoint window_step must be >= 1");
  const ParamLayout layout(spec);
  if (parameters.size() != layout.total) {
    throw ShapeError("checkpoint carries " + std::to_string(parameters.size()) +
                     " parameters, model needs " + std::to_string(layout.total));
  }
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c) {
  c.validate();
  Writer w;
  w.bytes(kCheckpointMagic, kMagicSize);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.spec.head));
  for (const int v : {c.spec.n_steps, c.spec.step_dim, c.spec.hidden_size, c.spec.layers_per_stack,
                      c.spec.n_stacks, c.spec.dense_width, c.window_step}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u32(static_cast<std::uint32_t>(c.selection.size()));
  for (const auto ch : c.selection.channels()) w.str(dataio::channel_name(ch));
  for (const auto ch : c.selection.channels()) {
    const auto& s = c.stats.at(ch);
    w.f64(s.mean);
    w.f64(s.std);
  }
  w.u32(static_cast<std::uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u64(static_cast<std::uint64_t>(c.parameters.size()));
  for (Eigen::Index i = 0; i < c.parameters.size(); ++i) w.f64(c.parameters[i]);
  auto& buf = w.buffer();
  const auto hash = fnv1a(buf.data(), buf.size());
  w.u64(hash);
  return std::move(buf);
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagicSize || std::memcmp(bytes.data(), kCheckpointMagic, kMagicSize) != 0) {
    throw LoadError("not a checkpoint file (bad magic)");
  }
  Reader r(bytes);
  r.take(kMagicSize);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw LoadError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  const auto head = r.u32();
  if (head > static_cast<std::uint32_t>(Head::Forecast)) throw LoadError("checkpoint has unknown head");
  c.spec.head = static_cast<Head>(head);
  c.spec.n_steps = r.i32();
  c.spec.step_dim = r.i32();
  c.spec.hidden_size = r.i32();
  c.spec.layers_per_stack = r.i32();
  c.spec.n_stacks = r.i32();
  c.spec.dense_width = r.i32();
  c.window_step = r.i32();

  const auto n_sel = r.i32();
  std::vector<dataio::Channel> channels;
  for (int i = 0; i < n_sel; ++i) channels.push_back(dataio::channel_from_name(r.str()));
  c.selection = dataio::FeatureSelection(channels);
  for (const auto ch : channels) {
    dataio::ChannelStats s{ch, r.f64(), 0.0};
    s.std = r.f64();
    c.stats.channels.push_back(s);
  }
  const auto n_meta = r.i32();
  for (int i = 0; i < n_meta; ++i) {
    auto key = r.str();
    auto value = r.str();
    c.metadata.emplace_back(std::move(key), std::move(value));
  }
  const auto n_params = r.u64();
  if (n_params > (bytes.size() - r.position()) / 8) throw LoadError("checkpoint is truncated");
  c.parameters.resize(static_cast<Eigen::Index>(n_params));
  for (Eigen::Index i = 0; i < c.parameters.size(); ++i) c.parameters[i] = r.f64();
  const auto body = r.position();
  const auto stored = r.u64();
  if (stored != fnv1a(bytes.data(), body)) throw LoadError("checkpoint checksum mismatch");
  if (r.position() != bytes.size()) throw LoadError("checkpoint has trailing bytes");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw LoadError(std::string("inconsistent checkpoint: ") + e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& file) {
  const auto bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write failed for checkpoint " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + file.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes);
  } catch (const LoadError& e) {
    throw LoadError(file.string() + ": " + e.what());
  }
}

Network<double> network_from(const Checkpoint& checkpoint) {
  checkpoint.validate();
  Network<double> net(checkpoint.spec);
  net.set_parameters(checkpoint.parameters);
  return net;
}

}  // namespace rul2stage::nn
