/**
 * @file cli.hpp
 * @brief Run configuration and the commands behind the qtwist executable.
 */
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qtwist/moments.hpp"

namespace qtwist::cli {

using ojson = nlohmann::ordered_json;

/// Exit codes.
inline constexpr int kPass = 0;
inline constexpr int kToleranceFailure = 1;
inline constexpr int kInvalidConfig = 2;

struct Tolerances {
    double gauss = 1e-9;  // times s
    double poisson = 1e-8;
    double afe = 1e-8;
    double afe_sq = 1e-7;
    double functional_equation = 1e-8;
    double omega = 1e-10;
    double euler = 1e-10;
    double kernel = 1e-6;
    double script_g = 1e-5;
    double orthogonality = 1e-12;
    double h_average = 1e-8;
    double quartic = 1e-6;
    double envelope_constant = 10;
};

struct RunConfig {
    std::string command;
    u64 q = 17;
    std::string character;  // label such as 17[4]; empty: first even primitive of `order`
    u64 order = 4;
    u64 r = 34, h = 1, l = 1;
    std::vector<double> X{65536};
    std::string Y = "auto";  // number, or auto for floor(X^{1/8}) (at least 2)
    double delta = 0.05;
    int moment = 1;
    std::vector<u64> d;  // lvalue
    std::vector<std::string> suites;  // verify; empty means all
    std::string inject_fault;  // verify test hook: gauss
    Tolerances tol;
    // runtime only, kept out of report bodies
    unsigned workers = 1;
    std::string out, csv;
};

/// Throws std::invalid_argument with a readable message.
void validate(const RunConfig& c);
DirichletCharacter resolve_character(const RunConfig& c);
double resolve_Y(const RunConfig& c, double X);
FamilySpec family_at(const RunConfig& c, double X);
/// Everything that determines the result; no worker count, no paths.
ojson config_json(const RunConfig& c);

struct CommandResult {
    int exit_code = kPass;
    ojson body;
    ojson runtime;
    std::vector<std::string> csv;  // header first
    std::vector<std::string> log;  // human-readable lines
};

CommandResult run(const RunConfig& c);

std::vector<std::string> suite_names();

}  // namespace qtwist::cli
