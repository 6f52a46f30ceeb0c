#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nonlocal/nonlocal.hpp"

namespace {

unsigned default_threads() {
    if (const char* env = std::getenv("NONLOCAL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return 1;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw nonlocal::config_error("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonlocal evolution toolkit: simulate du/dt = -u + g(t, Ku), estimate pullback "
                 "attractors, verify comparison and energy-decay properties"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    unsigned threads = default_threads();
    bool quiet = false;

    const char* names[] = {"simulate", "attractor", "compare", "lyapunov", "sweep", "selftest"};
    const char* descs[] = {
        "integrate one trajectory and write trajectory.csv + summary.json",
        "estimate the pullback attractor section and write attractor.json + members.csv",
        "integrate an ordered triple and verify the comparison principle",
        "track the energy functional along a trajectory and classify its limit",
        "semicontinuity sweep over a parameter family, writing sweep.csv",
        "run the built-in check suite and write selftest.json"};
    for (int i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], descs[i]);
        sub->add_option("--config", config_path, "path to the JSON run configuration");
        sub->add_option("--output-dir", output_dir, "override the config's output directory");
        sub->add_option("--threads", threads, "worker threads for independent runs");
        sub->add_flag("--quiet", quiet, "suppress progress notes");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string cmd = app.get_subcommands().front()->get_name();

    nonlocal::RunContext ctx;
    ctx.threads = threads;
    ctx.quiet = quiet;
    ctx.output_dir_override = output_dir;

    try {
        if (!config_path.empty()) {
            ctx.cfg = nonlocal::parse_config(read_file(config_path));
        } else if (cmd != "selftest") {
            std::cerr << "configuration error: '" << cmd << "' needs --config\n";
            return 2;
        }
    } catch (const nonlocal::error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }

    return nonlocal::run(cmd, ctx);
}
