// Command-line laboratory: runs bundled or user scenario files through the
// memory, spectrometer and cavity models and writes columnar artifacts.
//
// Exit codes: 0 ok, 2 parse trouble (CLI or scenario file), 3 validation
// trouble (unknown keys, bad ranges), 4 numeric trouble while running.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "qmem/constants.hpp"
#include "scenario.hpp"

namespace {

struct JobResult {
    int code = 0;
    std::string out, err;
};

JobResult run_one(const std::string& path, const std::string& root_override) {
    JobResult r;
    try {
        const qmemcli::Scenario sc = qmemcli::parse_scenario_file(path);
        std::string root = root_override;
        if (root.empty()) root = sc.output_root;
        if (root.empty()) root = "out";
        const qmemcli::Artifacts art = qmemcli::run_scenario(sc);
        const std::string dir = root + "/" + sc.name;
        qmemcli::write_artifacts(dir, art);
        r.out = sc.name + ": ok, " + std::to_string(art.files.size()) + " files in " + dir + "\n";
    } catch (const qmemcli::ParseError& e) {
        r.code = 2;
        r.err = std::string("qmem: parse: ") + e.what() + "\n";
    } catch (const qmem::ConfigError& e) {
        r.code = 3;
        r.err = "qmem: validation: " + path + ": " + e.what() + "\n";
    } catch (const qmem::NumericError& e) {
        r.code = 4;
        r.err = "qmem: numeric: " + path + ": " + e.what() + "\n";
    } catch (const std::exception& e) {
        r.code = 4;
        r.err = "qmem: error: " + path + ": " + e.what() + "\n";
    }
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scenario laboratory for a gradient-echo atomic memory"};
    app.require_subcommand(1);

    std::vector<std::string> run_files, val_files;
    std::string outdir;
    int jobs = 0;

    CLI::App* cmd_run = app.add_subcommand("run", "run scenario files, write artifact folders");
    cmd_run->add_option("files", run_files, "scenario files")->required();
    cmd_run->add_option("--output-dir", outdir,
                        "artifact root; beats QMEM_OUTPUT_DIR and the scenario's output_dir");
    cmd_run->add_option("--jobs", jobs, "scenarios run in parallel; QMEM_JOBS sets the default");

    CLI::App* cmd_list = app.add_subcommand("list", "print the bundled scenario catalog");

    CLI::App* cmd_val =
        app.add_subcommand("validate", "parse and check scenario files without running");
    cmd_val->add_option("files", val_files, "scenario files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (cmd_list->parsed()) {
        for (const qmemcli::CatalogEntry& e : qmemcli::catalog())
            std::printf("%-28s %-18s %s\n", e.file, e.kind, e.what);
        return 0;
    }

    if (cmd_val->parsed()) {
        int worst = 0;
        for (const std::string& path : val_files) {
            try {
                const qmemcli::Scenario sc = qmemcli::parse_scenario_file(path);
                qmemcli::validate_scenario(sc);
                std::printf("%s: valid (%s)\n", sc.name.c_str(), sc.kind.c_str());
            } catch (const qmemcli::ParseError& e) {
                std::fprintf(stderr, "qmem: parse: %s\n", e.what());
                worst = std::max(worst, 2);
            } catch (const qmem::ConfigError& e) {
                std::fprintf(stderr, "qmem: validation: %s: %s\n", path.c_str(), e.what());
                worst = std::max(worst, 3);
            } catch (const std::exception& e) {
                std::fprintf(stderr, "qmem: error: %s: %s\n", path.c_str(), e.what());
                worst = std::max(worst, 4);
            }
        }
        return worst;
    }

    // run
    std::string root = outdir;
    if (root.empty())
        if (const char* env = std::getenv("QMEM_OUTPUT_DIR")) root = env;
    if (jobs <= 0)
        if (const char* env = std::getenv("QMEM_JOBS")) jobs = std::atoi(env);
    jobs = std::clamp(jobs <= 0 ? 1 : jobs, 1, 16);

    std::vector<JobResult> results(run_files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= run_files.size()) return;
            results[i] = run_one(run_files[i], root);
        }
    };
    const std::size_t nthreads =
        std::min<std::size_t>(static_cast<std::size_t>(jobs), run_files.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    int worst = 0;
    for (const JobResult& r : results) {
        if (!r.out.empty()) std::fputs(r.out.c_str(), stdout);
        if (!r.err.empty()) std::fputs(r.err.c_str(), stderr);
        worst = std::max(worst, r.code);
    }
    return worst;
}
