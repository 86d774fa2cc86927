#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>

#include "gazelab/io.hpp"

namespace gazelab::cmd {

// Each command takes the parsed configuration (flags already merged in) and
// writes its outputs plus an effective-config echo (config.txt) into
// out_dir. Errors surface as the library exception taxonomy.
void train(const io::Config& cfg, const std::filesystem::path& out_dir);
void eval(const io::Config& cfg, const std::filesystem::path& checkpoint,
          const std::filesystem::path& out_dir);
void dissect(const io::Config& cfg, const std::filesystem::path& checkpoint,
             const std::filesystem::path& out_dir);
void synth(const io::Config& cfg, const std::filesystem::path& out_dir);

// Runs fn and maps exceptions onto the exit-code contract:
// 0 success, 2 usage/config/shape/parse errors, 3 numeric failures.
int dispatch(const std::function<void()>& fn, std::ostream& err);

}  // namespace gazelab::cmd
