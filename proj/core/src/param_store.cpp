#include "vpcnet/param_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vpcnet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'V', 'P', 'C', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kVersion = 1;

bool is_state_path(const std::string& path) {
  return path.rfind("optim.", 0) == 0 || path.rfind("stats.", 0) == 0;
}

template <typename T>
void append(std::vector<std::uint8_t>& out, const T& value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T read() {
    if (offset_ + sizeof(T) > bytes_.size()) fail("truncated record");
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  std::string read_string(std::size_t len) {
    if (offset_ + len > bytes_.size()) fail("truncated path");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + offset_), len);
    offset_ += len;
    return s;
  }

  void read_doubles(double* dst, std::size_t count) {
    const std::size_t bytes = count * sizeof(double);
    if (offset_ + bytes > bytes_.size()) fail("truncated payload");
    std::memcpy(dst, bytes_.data() + offset_, bytes);
    offset_ += bytes;
  }

  bool done() const { return offset_ == bytes_.size(); }
  std::size_t offset() const { return offset_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("checkpoint parse error at byte " +
                             std::to_string(offset_) + ": " + what);
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t offset_ = 0;
};

}  // namespace

Tensor& ParamStore::create_uniform(const std::string& path,
                                   std::vector<std::size_t> shape, double low,
                                   double high, DeterministicRng& rng) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> data(n);
  for (double& v : data) v = rng.uniform(low, high);
  return create_from(path, std::move(shape), std::move(data), true);
}

Tensor& ParamStore::create_zeros(const std::string& path,
                                 std::vector<std::size_t> shape,
                                 bool trainable) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return create_from(path, std::move(shape), std::vector<double>(n, 0.0),
                     trainable);
}

Tensor& ParamStore::create_from(const std::string& path,
                                std::vector<std::size_t> shape,
                                std::vector<double> data, bool trainable) {
  if (path.empty()) throw std::invalid_argument("empty parameter path");
  if (entries_.count(path))
    throw std::invalid_argument("duplicate parameter path: " + path);
  auto [it, inserted] = entries_.emplace(
      path,
      Tensor::from_data(std::move(shape), std::move(data), trainable));
  (void)inserted;
  return it->second;
}

bool ParamStore::contains(const std::string& path) const {
  return entries_.count(path) != 0;
}

Tensor& ParamStore::at(const std::string& path) {
  auto it = entries_.find(path);
  if (it == entries_.end())
    throw std::invalid_argument("unknown parameter path: " + path);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& path) const {
  auto it = entries_.find(path);
  if (it == entries_.end())
    throw std::invalid_argument("unknown parameter path: " + path);
  return it->second;
}

Tensor& ParamStore::state(const std::string& path,
                          const std::vector<std::size_t>& shape) {
  auto it = entries_.find(path);
  if (it != entries_.end()) return it->second;
  if (!is_state_path(path))
    throw std::invalid_argument("state path must start with optim. or stats.: " +
                                path);
  return create_zeros(path, shape, false);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [path, tensor] : entries_)
    if (tensor.requires_grad()) n += tensor.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [path, tensor] : entries_) tensor.zero_grad();
}

std::vector<std::uint8_t> ParamStore::serialize() const {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
  out.push_back(kVersion);
  for (const auto& [path, tensor] : entries_) {
    append(out, static_cast<std::uint32_t>(path.size()));
    out.insert(out.end(), path.begin(), path.end());
    append(out, static_cast<std::uint32_t>(tensor.shape().size()));
    for (std::size_t d : tensor.shape())
      append(out, static_cast<std::uint64_t>(d));
    const auto data = tensor.data();
    const auto* p = reinterpret_cast<const std::uint8_t*>(data.data());
    out.insert(out.end(), p, p + data.size() * sizeof(double));
  }
  return out;
}

void ParamStore::save(const std::filesystem::path& file) const {
  const std::vector<std::uint8_t> bytes = serialize();
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for write: " + file.string());
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed: " + file.string());
}

ParamStore ParamStore::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader reader(bytes);
  if (bytes.size() < sizeof(kMagic) + 1 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    reader.fail("bad magic");
  reader.read_string(sizeof(kMagic));
  std::uint8_t version = reader.read<std::uint8_t>();
  if (version != kVersion)
    reader.fail("unsupported version " + std::to_string(version));

  ParamStore store;
  std::string previous;
  while (!reader.done()) {
    const std::uint32_t path_len = reader.read<std::uint32_t>();
    std::string path = reader.read_string(path_len);
    if (!previous.empty() && !(previous < path))
      reader.fail("paths out of lexicographic order near '" + path + "'");
    const std::uint32_t rank = reader.read<std::uint32_t>();
    if (rank > 8) reader.fail("implausible rank");
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape[i] = static_cast<std::size_t>(reader.read<std::uint64_t>());
      count *= shape[i];
    }
    std::vector<double> data(count);
    reader.read_doubles(data.data(), count);
    store.create_from(path, std::move(shape), std::move(data),
                      !is_state_path(path));
    previous = std::move(path);
  }
  return store;
}

ParamStore ParamStore::load(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + file.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void adam_step(ParamStore& store, const AdamOptions& opt) {
  Tensor& step_state = store.state("optim.step", {1});
  const double t = step_state.data()[0] + 1.0;
  const double bc1 = 1.0 - std::pow(opt.beta1, t);
  const double bc2 = 1.0 - std::pow(opt.beta2, t);

  // Collect paths first; creating moment entries mutates the map.
  std::vector<std::string> trainable;
  for (const auto& [path, tensor] : store.entries())
    if (tensor.requires_grad()) trainable.push_back(path);

  for (const std::string& path : trainable) {
    Tensor& param = store.at(path);
    Tensor& m = store.state("optim.m." + path, param.shape());
    Tensor& v = store.state("optim.v." + path, param.shape());

    const bool has_grad = param.has_grad();
    std::span<const double> g =
        has_grad ? param.grad() : std::span<const double>{};
    if (has_grad) {
      for (double gv : g)
        if (!std::isfinite(gv))
          throw std::runtime_error("adam_step: non-finite gradient at " + path);
    }

    auto md = m.mutable_data();
    auto vd = v.mutable_data();
    auto pd = param.mutable_data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      const double gi = has_grad ? g[i] : 0.0;
      md[i] = opt.beta1 * md[i] + (1.0 - opt.beta1) * gi;
      vd[i] = opt.beta2 * vd[i] + (1.0 - opt.beta2) * gi * gi;
      const double mhat = md[i] / bc1;
      const double vhat = vd[i] / bc2;
      pd[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
  step_state.mutable_data()[0] = t;
}

std::uint64_t adam_step_count(const ParamStore& store) {
  if (!store.contains("optim.step")) return 0;
  return static_cast<std::uint64_t>(store.at("optim.step").data()[0]);
}

}  // namespace vpcnet
