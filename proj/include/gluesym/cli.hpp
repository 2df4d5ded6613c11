#pragma once

// Commands of the gluesym tool.  Each command returns a report whose JSON
// form is printed on stdout; the exit code is 0 when everything passed, 1 on
// a failed verification, 2 when the input could not be parsed and 3 on a
// numeric failure.

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gluesym::cli {

enum ExitCode { kPass = 0, kVerificationFailure = 1, kParseFailure = 2, kNumericFailure = 3 };

struct Options {
    std::string stage = "Mprime";  // homology
    std::string out;               // nz: also write the NZ JSON here
    std::string coords;            // nonab: abelian point on the tetrahedra
    double tol = 1e-12;
    int max_iter = 100;
    int retries = 30;
    std::uint64_t seed = 0x5eed;
    int points = 20;  // nonab: random slice points
    bool timings = false;
};

struct Verdict {
    std::string identity;
    bool passed = false;
    std::string detail;
};

struct Report {
    std::string command;
    std::string input_digest;  // FNV-1a of the input bytes
    nlohmann::json results = nlohmann::json::object();
    std::vector<Verdict> verdicts;
    std::optional<nlohmann::json> error;
    std::optional<double> seconds;
    int exit_code = kPass;

    nlohmann::json to_json() const;
};

// Reads GLUESYM_SEED over opts.seed.
Options apply_environment(Options opts);

// Never throws for library errors: they end up in report.error with the
// matching exit code.
Report run(const std::string& command, const std::string& file, const Options& opts);

const std::vector<std::string>& commands();

// Rounded to 15 significant digits for printing.
double round15(double x);

}  // namespace gluesym::cli
