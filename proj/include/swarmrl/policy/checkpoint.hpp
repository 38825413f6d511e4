#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "swarmrl/policy/network.hpp"
#include "swarmrl/policy/serialize.hpp"

namespace swarmrl::policy {

// Byte layout (docs/checkpoint_format.md):
//   magic "SWRLCKPT" | u32 version | u64 header length H | H bytes JSON
//   | policy params f64[] | value params f64[]
// All integers and floats little-endian.

inline constexpr std::array<char, 8> kCheckpointMagic{'S', 'W', 'R', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  env::TaskConfig task;
  env::WorldConfig world;
  NetworkSpec network;
  Policy policy;
  ValueFunction value;
  int iteration = 0;
};

namespace detail {

template <typename U>
void write_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> buf{};
  for (std::size_t k = 0; k < sizeof(U); ++k) buf[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  os.write(buf.data(), buf.size());
}

template <typename U>
U read_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> buf{};
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!is) throw CheckpointError("checkpoint: truncated file");
  U v = 0;
  for (std::size_t k = 0; k < sizeof(U); ++k) v |= static_cast<U>(buf[k]) << (8 * k);
  return v;
}

inline void write_doubles(std::ostream& os, const Vector& v) {
  for (Index k = 0; k < v.size(); ++k) write_le(os, std::bit_cast<std::uint64_t>(v[k]));
}

inline Vector read_doubles(std::istream& is, Index n) {
  Vector v(n);
  for (Index k = 0; k < n; ++k) v[k] = std::bit_cast<double>(read_le<std::uint64_t>(is));
  return v;
}

}  // namespace detail

inline Json checkpoint_header(const Checkpoint& c) {
  return {{"iteration", c.iteration},
          {"task", to_json(c.task)},
          {"world", to_json(c.world)},
          {"network", to_json(c.network)},
          {"features", to_json(c.policy.net.features())},
          {"policy_layout", to_json(c.policy.net.layout())},
          {"policy_count", c.policy.params.size()},
          {"value_layout", to_json(c.value.net.layout())},
          {"value_count", c.value.params.size()},
          {"value_normalization", {{"mean", c.value.ret_mean}, {"std", c.value.ret_std}}}};
}

inline void write_checkpoint(std::ostream& os, const Checkpoint& c) {
  const std::string header = checkpoint_header(c).dump();
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::write_le(os, kCheckpointVersion);
  detail::write_le(os, static_cast<std::uint64_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  detail::write_doubles(os, c.policy.params);
  detail::write_doubles(os, c.value.params);
  if (!os) throw CheckpointError("checkpoint: write failed");
}

inline Checkpoint read_checkpoint(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kCheckpointMagic) throw CheckpointError("checkpoint: bad magic");
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  const auto hlen = detail::read_le<std::uint64_t>(is);
  if (hlen > (std::uint64_t{1} << 30)) throw CheckpointError("checkpoint: header too large");
  std::string text(hlen, '\0');
  is.read(text.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw CheckpointError("checkpoint: truncated header");
  Json h;
  try {
    h = Json::parse(text);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint: header is not valid JSON: ") + e.what());
  }

  Checkpoint c;
  std::vector<std::string> errors;
  try {
    c.iteration = h.at("iteration").get<int>();
    from_json(h.at("task"), c.task, errors);
    from_json(h.at("world"), c.world, errors);
    from_json(h.at("network"), c.network, errors);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: incomplete header: ") + e.what());
  }
  if (!errors.empty()) {
    std::string msg = "checkpoint: invalid header";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw CheckpointError(msg);
  }
  const FeatureSpec features = FeatureSpec::from_task(c.task, c.world);
  if (to_json(features) != h.at("features")) throw CheckpointError("checkpoint: feature spec does not match task");
  c.policy.net = PolicyNetwork(features, c.network, 2, true);
  NetworkSpec vs = c.network;
  vs.head_init_scale = 1.0;
  c.value.net = PolicyNetwork(features, vs, 1, false);
  if (to_json(c.policy.net.layout()) != h.at("policy_layout") || to_json(c.value.net.layout()) != h.at("value_layout") ||
      h.at("policy_count").get<Index>() != c.policy.net.param_count() ||
      h.at("value_count").get<Index>() != c.value.net.param_count())
    throw CheckpointError("checkpoint: parameter layout mismatch");
  c.policy.params = detail::read_doubles(is, c.policy.net.param_count());
  c.value.params = detail::read_doubles(is, c.value.net.param_count());
  c.value.ret_mean = h.at("value_normalization").at("mean").get<double>();
  c.value.ret_std = h.at("value_normalization").at("std").get<double>();
  if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError("checkpoint: trailing bytes");
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("checkpoint: cannot open " + path.string());
  write_checkpoint(os, c);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint: cannot open " + path.string());
  return read_checkpoint(is);
}

}  // namespace swarmrl::policy
