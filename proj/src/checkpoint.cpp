#include "alst/checkpoint.hpp"

#include <cstring>

#include "alst/config.hpp"
#include "alst/errors.hpp"
#include "alst/fileutil.hpp"

namespace alst {

namespace {

constexpr char kMagic[8] = {'A', 'L', 'S', 'T', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, 8);
  put_u64(out, u);
}

void put_str(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out += s;
}

void put_tensor_data(std::string& out, const Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i) put_f64(out, t.at(i));
}

struct Reader {
  const unsigned char* p;
  std::size_t left;
  std::string where;

  void need(std::size_t n) const {
    if (left < n) throw DataError("checkpoint " + where + ": truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    p += 8;
    left -= 8;
    return v;
  }
  double f64() {
    const std::uint64_t u = u64();
    double d;
    std::memcpy(&d, &u, 8);
    return d;
  }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
  void tensor_data(Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = f64();
  }
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::string out;
  out.append(kMagic, 8);
  put_u32(out, kVersion);
  put_str(out, format_model_config(ckpt.config));
  put_str(out, ckpt.config_echo);
  put_u64(out, static_cast<std::uint64_t>(ckpt.epoch));
  put_str(out, ckpt.rng_state);

  put_u64(out, ckpt.params.size());
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const Tensor& t = ckpt.params.tensor(i);
    put_str(out, ckpt.params.name(i));
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d = 0; d < t.rank(); ++d) put_u64(out, t.dim(d));
    put_tensor_data(out, t);
  }

  out.push_back(ckpt.has_adam ? 1 : 0);
  if (ckpt.has_adam) {
    put_u64(out, ckpt.adam.step_count);
    put_f64(out, ckpt.adam.beta1);
    put_f64(out, ckpt.adam.beta2);
    put_f64(out, ckpt.adam.epsilon);
    for (const Tensor& t : ckpt.adam.first_moment) put_tensor_data(out, t);
    for (const Tensor& t : ckpt.adam.second_moment) put_tensor_data(out, t);
  }
  write_file_bytes(path, out.data(), out.size());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  Reader r{bytes.data(), bytes.size(), path.string()};
  r.need(8);
  if (std::memcmp(r.p, kMagic, 8) != 0)
    throw DataError("checkpoint " + path.string() + ": bad magic");
  r.p += 8;
  r.left -= 8;
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw DataError("checkpoint " + path.string() + ": unsupported version " +
                    std::to_string(version));

  Checkpoint ckpt;
  ckpt.config = parse_model_config(r.str());
  ckpt.config_echo = r.str();
  ckpt.epoch = static_cast<std::int64_t>(r.u64());
  ckpt.rng_state = r.str();

  const std::uint64_t n_params = r.u64();
  for (std::uint64_t i = 0; i < n_params; ++i) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.u64());
    Tensor& t = ckpt.params.add(name, shape);
    r.tensor_data(t);
  }

  r.need(1);
  ckpt.has_adam = *r.p != 0;
  ++r.p;
  --r.left;
  if (ckpt.has_adam) {
    ckpt.adam.step_count = r.u64();
    ckpt.adam.beta1 = r.f64();
    ckpt.adam.beta2 = r.f64();
    ckpt.adam.epsilon = r.f64();
    for (std::uint64_t i = 0; i < n_params; ++i) {
      ckpt.adam.first_moment.emplace_back(ckpt.params.tensor(i).shape());
      r.tensor_data(ckpt.adam.first_moment.back());
    }
    for (std::uint64_t i = 0; i < n_params; ++i) {
      ckpt.adam.second_moment.emplace_back(ckpt.params.tensor(i).shape());
      r.tensor_data(ckpt.adam.second_moment.back());
    }
  }
  if (r.left != 0)
    throw DataError("checkpoint " + path.string() + ": " + std::to_string(r.left) +
                    " trailing bytes");
  return ckpt;
}

}  // namespace alst
