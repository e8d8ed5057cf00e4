#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ntrl/policy/network.hpp"

namespace ntrl {

inline constexpr std::string_view kCheckpointMagic = "NTRL";
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint {
  ArchitectureConfig arch;
  std::vector<float> params;
  long long step = 0;
  std::uint64_t seed = 0;
  std::string reward_config_hash;
  std::string experiment_digest;

  template <class T>
  PolicyNetwork<T> network() const {
    return PolicyNetwork<T>(arch, std::vector<T>(params.begin(), params.end()));
  }
};

template <class T>
Checkpoint make_checkpoint(const PolicyNetwork<T>& net, long long step, std::uint64_t seed,
                           std::string reward_config_hash = {}, std::string experiment_digest = {}) {
  Checkpoint c;
  c.arch = net.arch();
  c.params.assign(net.params().begin(), net.params().end());
  c.step = step;
  c.seed = seed;
  c.reward_config_hash = std::move(reward_config_hash);
  c.experiment_digest = std::move(experiment_digest);
  return c;
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::string_view take(std::size_t n) {
    if (remaining() < n) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(int bytes) {
    const auto s = take(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[static_cast<std::size_t>(i)])) << (8 * i);
    return v;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Layout: "NTRL", u32 format version, u32 header length, header JSON,
/// u64 parameter count, float32 parameters, u64 FNV-1a digest of everything
/// before it. All integers little-endian.
inline std::string encode_checkpoint(const Checkpoint& c) {
  ordered_json header;
  header["architecture"] = to_json(c.arch);
  header["step"] = c.step;
  header["seed"] = c.seed;
  header["reward_config_hash"] = c.reward_config_hash;
  header["experiment_digest"] = c.experiment_digest;
  header["numeric_mode"] = "float32";
  const std::string text = header.dump();
  std::string out(kCheckpointMagic);
  detail::put_u32(out, kCheckpointFormatVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  detail::put_u64(out, c.params.size());
  for (float p : c.params) detail::put_u32(out, std::bit_cast<std::uint32_t>(p));
  detail::put_u64(out, fnv1a64(out));
  return out;
}

/// Parses checkpoint bytes. `expected` (when given) must equal the stored
/// architecture, otherwise VERSION_MISMATCH.
inline Checkpoint decode_checkpoint(std::string_view bytes, const ArchitectureConfig* expected = nullptr) {
  if (bytes.size() < kCheckpointMagic.size() + 4 + 4 + 8 + 8 || bytes.substr(0, 4) != kCheckpointMagic)
    throw Error(ErrorCode::CorruptCheckpoint, "not a checkpoint file (bad magic or too short)");
  detail::ByteReader tail(bytes.substr(bytes.size() - 8));
  if (tail.uint(8) != fnv1a64(bytes.substr(0, bytes.size() - 8)))
    throw Error(ErrorCode::CorruptCheckpoint, "checkpoint digest mismatch");
  detail::ByteReader r(bytes.substr(0, bytes.size() - 8));
  r.take(4);
  const auto version = static_cast<std::uint32_t>(r.uint(4));
  if (version != kCheckpointFormatVersion)
    throw Error(ErrorCode::VersionMismatch, "checkpoint format version " + std::to_string(version) + ", expected " +
                                                std::to_string(kCheckpointFormatVersion));
  const auto header_len = static_cast<std::size_t>(r.uint(4));
  json header;
  try {
    header = json::parse(r.take(header_len));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("bad checkpoint header: ") + e.what());
  }
  Checkpoint c;
  try {
    c.arch = architecture_from_json(header.at("architecture"));
    c.step = header.at("step").get<long long>();
    c.seed = header.at("seed").get<std::uint64_t>();
    c.reward_config_hash = header.value("reward_config_hash", "");
    c.experiment_digest = header.value("experiment_digest", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("bad checkpoint header: ") + e.what());
  }
  if (c.arch.version != kArchitectureVersion)
    throw Error(ErrorCode::VersionMismatch, "architecture version " + std::to_string(c.arch.version));
  if (expected && !(*expected == c.arch))
    throw Error(ErrorCode::VersionMismatch, "checkpoint architecture differs from the expected configuration");
  const auto count = r.uint(8);
  if (count != ParamLayout(c.arch).total || r.remaining() != count * 4)
    throw Error(ErrorCode::CorruptCheckpoint, "parameter block size does not match the architecture");
  c.params.resize(count);
  for (auto& p : c.params) p = std::bit_cast<float>(static_cast<std::uint32_t>(r.uint(4)));
  return c;
}

/// Writes through a temporary file and renames it into place, so readers
/// never observe a partial checkpoint.
inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = encode_checkpoint(c);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string(), "path");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string(), "path");
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path, const ArchitectureConfig* expected = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open checkpoint " + path.string(), "path");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, expected);
}

/// A checkpoint is usable with a pack only if its vocabularies are the pack's.
inline void require_pack_vocabulary(const ArchitectureConfig& arch, const ContentPack& pack) {
  const auto expected = ArchitectureConfig::from_pack(pack);
  if (arch.monsters != expected.monsters || arch.classes != expected.classes || arch.spells != expected.spells)
    throw Error(ErrorCode::VersionMismatch, "checkpoint vocabulary differs from the content pack");
}

}  // namespace ntrl
