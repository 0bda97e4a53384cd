#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

namespace rde::testing {

struct CliResult {
  int code = -1;
  std::string out; // stdout only; stderr goes to <dir>/stderr.txt
};

/// Runs the rde binary with `args` appended; args are passed through the shell verbatim.
inline CliResult run_cli(const std::string& args, const std::filesystem::path& stderr_path = "/dev/null")
{
  const std::string command = std::string(RDE_CLI_PATH) + " " + args + " 2>" + stderr_path.string();
  CliResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return result;
  std::array<char, 4096> buffer{};
  std::size_t n = 0;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.out.append(buffer.data(), n);
  }
  const int status = pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

} // namespace rde::testing
