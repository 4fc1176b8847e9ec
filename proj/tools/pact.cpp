// pact: phantom -> simulate -> reconstruct -> evaluate, plus sweeps.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pact/pipeline.hpp"

namespace {

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    long long seed = -1;
    std::string method;
};

void add_common(CLI::App* cmd, Common& o, bool with_method) {
    cmd->add_option("--config", o.config, "JSON config file (defaults apply to missing keys)");
    cmd->add_option("--set", o.sets, "override one key, e.g. --set method.tv.alpha=3e-3 (repeatable)")
        ->allow_extra_args(false);
    cmd->add_option("--out", o.out, "output directory (output.dir)");
    cmd->add_option("--seed", o.seed, "sets phantom.seed and signal.noise_seed")->check(CLI::NonNegativeNumber);
    if (with_method) cmd->add_option("--method", o.method, "method.name: fbp, lst, tv, tgv or wavelet");
}

pact::ExperimentConfig resolve(const Common& o) {
    std::vector<std::string> sets = o.sets;
    if (!o.out.empty()) sets.push_back("output.dir=" + pact::Json(o.out).dump());
    if (o.seed >= 0) {
        sets.push_back("phantom.seed=" + std::to_string(o.seed));
        sets.push_back("signal.noise_seed=" + std::to_string(o.seed));
    }
    if (!o.method.empty()) sets.push_back("method.name=" + pact::Json(o.method).dump());
    return pact::resolve_config(o.config, sets);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pact: 2D photoacoustic tomography reconstruction"};
    app.set_version_flag("--version", std::string(pact::kVersion));
    app.require_subcommand(1);

    Common o;
    auto* phantom = app.add_subcommand("phantom", "write the ground truth (and segmentation) images");
    auto* simulate = app.add_subcommand("simulate", "simulate pressure and preprocess it into f");
    auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct with method.name");
    auto* evaluate = app.add_subcommand("evaluate", "PSNR and ROC of a reconstruction");
    auto* run = app.add_subcommand("run", "phantom, simulate, reconstruct and evaluate in one go");
    auto* sweep = app.add_subcommand("sweep", "sweep.axis over sweep.values for every sweep.methods entry");
    auto* defaults = app.add_subcommand("defaults", "print the full default config");
    add_common(phantom, o, false);
    add_common(simulate, o, false);
    add_common(reconstruct, o, true);
    add_common(evaluate, o, true);
    add_common(run, o, true);
    add_common(sweep, o, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (defaults->parsed()) {
        std::cout << pact::default_config().dump(2) << '\n';
        return 0;
    }

    const pact::detail::Log log{&std::cerr, nullptr};
    try {
        const pact::ExperimentConfig cfg = resolve(o);
        if (phantom->parsed()) {
            pact::cmd_phantom(cfg, log);
        } else if (simulate->parsed()) {
            pact::cmd_simulate(cfg, log);
        } else if (reconstruct->parsed()) {
            pact::cmd_reconstruct(cfg, log);
        } else if (evaluate->parsed()) {
            const auto r = pact::cmd_evaluate(cfg, log);
            std::cout << r.method << " psnr_db=" << r.psnr;
            if (r.auc) std::cout << " auc=" << *r.auc;
            std::cout << '\n';
        } else if (run->parsed()) {
            const auto r = pact::run_all(cfg, log);
            std::cout << r.method << " psnr_db=" << r.psnr;
            if (r.auc) std::cout << " auc=" << *r.auc;
            std::cout << '\n';
        } else if (sweep->parsed()) {
            const auto s = pact::cmd_sweep(cfg, log);
            std::cout << s.csv.string() << '\n';
        }
    } catch (const pact::InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const pact::InvalidGeometry& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const pact::DependencyError& e) {
        std::cerr << "dependency error: " << e.what() << '\n';
        return 3;
    } catch (const pact::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
