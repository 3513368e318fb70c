#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "rattleback/stabilize.hpp"

namespace rattleback::cli {

/// Exit codes: 0 success, 1 report found a checksum mismatch, 2 rejected
/// input, 3 numerical failure.
enum ExitCode : int { kOk = 0, kMismatch = 1, kUsage = 2, kNumerical = 3 };

/// Runs one command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Start of a seeded stabilize run: uniform on the target Casimir sphere,
/// redrawn until it lies where the chosen perturbation applies.
Vec3 seeded_start(const PerturbationSpec& spec, const ModelParams& p, std::uint64_t seed);

}  // namespace rattleback::cli
