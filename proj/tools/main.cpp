// qtwist: command-line front end
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"

namespace {

using qtwist::cli::RunConfig;

void add_options(CLI::App& app, RunConfig& c) {
    app.add_option("command", c.command, "lvalue | moment1 | moment2 | predict | compare | verify")->required();
    app.set_config("--config", "", "key = value file; flags given on the command line win");
    app.allow_config_extras(false);

    app.add_option("--q", c.q, "modulus of psi (1 for the trivial character)");
    app.add_option("--character", c.character, "character label, e.g. 17[4]");
    app.add_option("--order", c.order, "order of psi when no label is given");
    app.add_option("--r", c.r, "family modulus, even and squarefree, q | r");
    app.add_option("--h", c.h, "residue class of d, odd and coprime to r");
    app.add_option("--l", c.l, "twist l in chi_8d(l)");
    app.add_option("--X", c.X, "X, or a list of X for a sweep");
    app.add_option("--Y", c.Y, "Y, or auto for floor(X^(1/8))");
    app.add_option("--delta", c.delta, "delta of the regime l r Y^2 <= X^(1/2 - delta)");
    app.add_option("--moment", c.moment, "1 or 2 (predict, compare)");
    app.add_option("--d", c.d, "d values (lvalue)");
    app.add_option("--suites", c.suites, "verify only these suites");
    app.add_option("--inject_fault", c.inject_fault, "test hook: corrupt one case of a suite (gauss)");
    app.add_option("--workers", c.workers, "worker threads for the d-sums");
    app.add_option("--out", c.out, "report body (JSON); runtime goes to <out>.runtime.json");
    app.add_option("--csv", c.csv, "CSV rows for plotting");

    auto& t = c.tol;
    app.add_option("--tol_gauss", t.gauss, "Gauss sums, absolute error over s");
    app.add_option("--tol_poisson", t.poisson, "Poisson identity, |LHS - RHS| / (1 + |LHS|)");
    app.add_option("--tol_afe", t.afe, "central values against the Hurwitz reference, relative");
    app.add_option("--tol_afe_sq", t.afe_sq, "second AFE against |L|^2, relative");
    app.add_option("--tol_functional_equation", t.functional_equation, "completed L, relative");
    app.add_option("--tol_omega", t.omega, "omega weights, absolute");
    app.add_option("--tol_euler", t.euler, "local factors, absolute");
    app.add_option("--tol_kernel", t.kernel, "K closed form against its alpha-sum, absolute");
    app.add_option("--tol_script_g", t.script_g, "script G against its Dirichlet series, absolute");
    app.add_option("--tol_orthogonality", t.orthogonality, "character sums, absolute");
    app.add_option("--tol_h_average", t.h_average, "h-average of the non-diagonal constant, absolute");
    app.add_option("--tol_quartic", t.quartic, "non-diagonal integral against the closed form, relative");
    app.add_option("--tol_envelope_constant", t.envelope_constant, "largest fitted envelope constant");
}

bool write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
    return bool(os);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Moments of quadratic twists of L-functions: sums, predictions and checks"};
    app.set_help_flag("--help", "print this help");  // -h would shadow --h
    RunConfig cfg;
    add_options(app, cfg);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return qtwist::cli::kInvalidConfig;
    }

    qtwist::cli::CommandResult res;
    try {
        qtwist::cli::validate(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return qtwist::cli::kInvalidConfig;
    }
    try {
        res = qtwist::cli::run(cfg);
    } catch (const std::exception& e) {
        std::cerr << cfg.command << " failed: " << e.what() << '\n';
        return qtwist::cli::kToleranceFailure;
    }

    for (const auto& line : res.log) std::cout << line << '\n';
    const std::string body = res.body.dump(2) + "\n";
    if (cfg.out.empty()) {
        std::cout << body;
    } else if (!write_file(cfg.out, body) || !write_file(cfg.out + ".runtime.json", res.runtime.dump(2) + "\n")) {
        std::cerr << "cannot write " << cfg.out << '\n';
        return qtwist::cli::kInvalidConfig;
    }
    if (!cfg.csv.empty() && !res.csv.empty()) {
        std::string text;
        for (const auto& row : res.csv) text += row + "\n";
        if (!write_file(cfg.csv, text)) {
            std::cerr << "cannot write " << cfg.csv << '\n';
            return qtwist::cli::kInvalidConfig;
        }
    }
    return res.exit_code;
}
