#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "anensolar/error.hpp"

namespace testing_support {

/// Fresh path under a per-suite scratch directory.
inline std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "anensolar_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

template <typename F>
anensolar::Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const anensolar::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an anensolar::Error";
  return anensolar::Errc::invalid_argument;
}

}  // namespace testing_support
