#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "ntrl/content/content_pack.hpp"

namespace ntrl::testing {

inline const std::filesystem::path kPackDir = NTRL_DEFAULT_PACK_DIR;

/// The bundled pack, loaded once per test binary.
inline const ContentPack& pack() {
  static const ContentPack p = load_content_pack(kPackDir);
  return p;
}

inline PackDocuments pack_documents() {
  PackDocuments docs;
  docs.monsters = detail::read_json_file(kPackDir / "monsters.json");
  docs.pc_templates = detail::read_json_file(kPackDir / "pc_templates.json");
  docs.spells = detail::read_json_file(kPackDir / "spells.json");
  docs.xp_tables = detail::read_json_file(kPackDir / "xp_tables.json");
  return docs;
}

inline std::size_t monster(std::string_view id) { return pack().monster_index(id).value(); }
inline std::size_t pc(std::string_view id) { return pack().pc_index(id).value(); }

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("ntrl_test_" + name + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <class F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code) << ", nothing was thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace ntrl::testing
