#include "gluesym/cli.hpp"
#include "gluesym/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace gluesym::cli;
    CLI::App app{"gluesym: gluing data and flat connections of triangulated 3-manifolds"};
    app.require_subcommand(1);
    Options opts;
    std::string file;
    for (const auto& name : commands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("file", file, "triangulation JSON")->required();
        sub->add_option("--tol", opts.tol, "residual tolerance");
        sub->add_option("--max-iter", opts.max_iter, "Newton iterations per start");
        sub->add_option("--retries", opts.retries, "random Newton starts");
        sub->add_option("--seed", opts.seed, "random seed (GLUESYM_SEED overrides)");
        sub->add_flag("--timings", opts.timings, "add wall-clock seconds to the report");
        if (name == "homology") sub->add_option("--stage", opts.stage, "M, M0 or Mprime");
        if (name == "nz") sub->add_option("--out", opts.out, "write the NZ JSON to this file");
        if (name == "nonab") {
            sub->add_option("--coords", opts.coords, "coordinates JSON of an abelian point");
            sub->add_option("--points", opts.points, "number of random slice points");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kParseFailure;
    }
    std::string command = app.get_subcommands().front()->get_name();
    try {
        opts = apply_environment(opts);
    } catch (const gluesym::Error& e) {
        std::cerr << e.what() << "\n";
        return kParseFailure;
    }
    Report r = run(command, file, opts);
    std::cout << r.to_json().dump(2) << "\n";
    if (r.error) std::cerr << (*r.error)["kind"].get<std::string>() << ": " << (*r.error)["message"].get<std::string>() << "\n";
    return r.exit_code;
}
