// opcalc: run the jobs of a spec file and write a JSON report.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "opcalc/cli.hpp"

namespace fs = std::filesystem;
using namespace opcalc::cli;

int main(int argc, char** argv) {
    CLI::App app{"Exact operadic bar constructions and filtrations over Q and F_p"};
    std::string jobs_file, out_dir, field;
    RunOptions opt;
    int threads = 0;
    bool csv = true;
    app.add_option("--jobs,jobs", jobs_file, "spec file with declarations and a [jobs] section")->required();
    app.add_option("--out", out_dir, "directory for report.json and betti.csv (default: report on stdout)");
    app.add_option("--field", field, "Q or Fp:p (overrides the file)");
    app.add_option("--degree-cap", opt.degree_cap, "internal degree cap")->capture_default_str();
    app.add_option("--arity-cap", opt.arity_cap, "arity cap for built-in operads")->capture_default_str();
    app.add_option("--bar-cap", opt.bar_cap, "bar degree cap in truncated mode")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (default: $OPCALC_THREADS, else hardware)");
    app.add_flag("--timing", opt.timing, "add wall-clock seconds per job (makes reports non-reproducible)");
    app.add_flag("!--no-csv", csv, "skip betti.csv");
    CLI11_PARSE(app, argc, argv);

    if (!field.empty()) opt.field = field;
    if (threads <= 0) {
        if (const char* env = std::getenv("OPCALC_THREADS")) threads = std::atoi(env);
        if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }

    SpecFile spec;
    try {
        spec = parse_spec(jobs_file, opt);
    } catch (const SpecErrors& e) {
        for (const auto& err : e.errors()) std::cerr << jobs_file << ": " << err.str() << "\n";
        return 2;
    }

    Report rep = run_all(spec, opt, threads);
    std::string text = rep.json.dump(2) + "\n";
    if (out_dir.empty()) {
        std::cout << text;
    } else {
        fs::create_directories(out_dir);
        std::ofstream(fs::path(out_dir) / "report.json", std::ios::binary) << text;
        if (csv) {
            std::ofstream t(fs::path(out_dir) / "betti.csv", std::ios::binary);
            t << "job,kind,degree,betti\n";
            for (std::size_t k = 0; k < rep.jobs.size(); ++k)
                for (const auto& [d, b] : rep.jobs[k].betti) t << k << "," << spec.jobs[k].kind << "," << d << "," << b << "\n";
        }
    }
    for (const auto& j : rep.jobs)
        if (!j.passed) std::cerr << "FAIL " << j.report.value("kind", "") << " (line " << j.report.value("line", 0) << ")"
                                 << (j.report.contains("error") ? ": " + j.report["error"].get<std::string>() : "") << "\n";
    return rep.passed ? 0 : 1;
}
