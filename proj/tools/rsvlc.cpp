// SPDX-License-Identifier: Apache-2.0
//
// rsvlc - rate-splitting beamformer design for multi-LED visible light downlinks
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Command line runner.
//
//   rsvlc validate <scenario.json>
//   rsvlc sweep <spec.json> [--seed S] [--max-iter M] [--tol T] [--out DIR] [--jobs J]
//   rsvlc solve <scenario.json> --scheme rsma|sdma|noma --pt-db X [--seed S] [--max-iter M] [--tol T] [--out DIR]
//
// Exit codes: 0 success, 2 some solves failed, 1 bad input.

#include "rsvlc/sweep.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace
{
    struct Overrides
    {
        std::optional<std::uint64_t> seed;
        std::optional<int> max_iter;
        std::optional<double> tol;
        std::optional<std::string> out;
        std::optional<int> jobs;

        void apply(rsvlc::ScaOptions &o) const
        {
            if (seed)
                o.seed = *seed;
            if (max_iter)
                o.max_iter = *max_iter;
            if (tol)
                o.stall_tol = *tol;
        }
    };

    void add_common(CLI::App *cmd, Overrides &ov)
    {
        cmd->add_option("--seed", ov.seed, "randomization seed");
        cmd->add_option("--max-iter", ov.max_iter, "SCA iteration cap");
        cmd->add_option("--tol", ov.tol, "SCA stall tolerance [bits/s/Hz]");
        cmd->add_option("--out", ov.out, "output directory");
    }

    int run_validate(const std::string &path)
    {
        const auto cfg = rsvlc::load_scenario(path);
        const auto errs = rsvlc::validate_scenario(cfg);
        for (const auto &e : errs)
            std::cerr << path << ": " << e << '\n';
        if (!errs.empty())
            return 1;
        const auto ch = rsvlc::generate_channel(cfg);
        std::cout << path << ": ok (" << cfg.num_leds() << " LEDs, " << cfg.num_users() << " users)\n";
        for (rsvlc::Index k = 0; k < ch.num_users(); ++k)
        {
            if (ch.gains.row(k).maxCoeff() <= 0.0)
                std::cout << "  warning: user " << k << " sees no LED\n";
        }
        return 0;
    }

    int run_sweep_cmd(const std::string &path, const Overrides &ov)
    {
        rsvlc::SweepSpec spec = rsvlc::load_sweep_spec(path);
        ov.apply(spec.options);
        if (ov.out)
            spec.output_dir = *ov.out;
        if (ov.jobs)
            spec.jobs = *ov.jobs;
        auto errs = rsvlc::validate_sweep(spec);
        if (spec.pt_db.size() < 2)
            errs.push_back("pt_db needs at least 2 points for a sweep");
        for (const auto &e : errs)
            std::cerr << path << ": " << e << '\n';
        if (!errs.empty())
            return 1;

        const auto res = rsvlc::run_sweep(spec);
        rsvlc::write_sweep_outputs(spec, res, spec.output_dir);

        for (const auto &r : res.records)
        {
            std::cout << rsvlc::to_string(r.scheme) << " pt_db=" << r.pt_db << ' ';
            if (r.ok())
                std::cout << "sum_rate=" << r.sum_rate << " iterations=" << r.iterations << (r.feasible ? "" : " INFEASIBLE") << '\n';
            else
                std::cout << "FAILED: " << r.status << '\n';
        }
        for (const auto &m : res.monotonicity)
            std::cout << "monotonicity: " << rsvlc::to_string(m.scheme) << " drops by " << m.drop << " from " << m.from_db << " to "
                      << m.to_db << " dB\n";
        std::cout << "wrote " << spec.output_dir << " (" << res.records.size() << " records, " << res.failures() << " failed)\n";
        return res.failures() > 0 ? 2 : 0;
    }

    int run_solve(const std::string &path, const std::string &scheme_name, double pt_db, double p_ref, const Overrides &ov)
    {
        const auto cfg = rsvlc::load_scenario(path);
        const auto errs = rsvlc::validate_scenario(cfg);
        for (const auto &e : errs)
            std::cerr << path << ": " << e << '\n';
        if (!errs.empty())
            return 1;
        const auto scheme = rsvlc::parse_scheme(scheme_name);
        rsvlc::ScaOptions opt;
        ov.apply(opt);

        const auto ch = rsvlc::generate_channel(cfg);
        const auto entropy = rsvlc::solve_entropy_params(cfg.signal_amplitude, cfg.signal_variance);
        const auto r = rsvlc::solve_point(cfg, ch, entropy, scheme, pt_db, p_ref, opt);

        rsvlc::json j{{"scheme", rsvlc::to_string(r.scheme)}, {"pt_db", r.pt_db},   {"pt", r.pt},
                      {"status", r.status},                    {"iterations", r.iterations}};
        if (r.ok())
        {
            j["sum_rate"] = r.sum_rate;
            j["user_rates"] = r.user_rates;
            j["sdr_objective"] = r.sdr_objective;
            j["restarts"] = r.restarts;
            j["power_slack"] = r.power_slack;
            j["peak_slack"] = r.peak_slack;
            j["feasible"] = r.feasible;
            j["rank_one_ratio"] = r.rank_one_ratio;
        }
        std::cout << j.dump(2) << '\n';
        if (ov.out)
        {
            rsvlc::detail::make_dir(*ov.out);
            rsvlc::write_traces({r}, (std::filesystem::path(*ov.out) / "trace.jsonl").string());
        }
        return r.ok() ? 0 : 2;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"rate-splitting beamformer design for multi-LED visible light downlinks"};
    app.require_subcommand(1);

    std::string scenario_path, spec_path, solve_path, scheme = "rsma";
    double pt_db = 0.0, p_ref = 1.0;
    Overrides sweep_ov, solve_ov;

    auto *validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("scenario", scenario_path, "scenario JSON")->required();

    auto *sweep = app.add_subcommand("sweep", "run a power sweep and write tables");
    sweep->add_option("spec", spec_path, "sweep spec JSON")->required();
    add_common(sweep, sweep_ov);
    sweep->add_option("--jobs", sweep_ov.jobs, "parallel solves");

    auto *solve = app.add_subcommand("solve", "solve one scheme at one power level");
    solve->add_option("scenario", solve_path, "scenario JSON")->required();
    solve->add_option("--scheme", scheme, "rsma, sdma or noma")->required();
    solve->add_option("--pt-db", pt_db, "electrical budget [dB]")->required();
    solve->add_option("--p-ref", p_ref, "0 dB reference power");
    add_common(solve, solve_ov);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try
    {
        if (*validate)
            return run_validate(scenario_path);
        if (*sweep)
            return run_sweep_cmd(spec_path, sweep_ov);
        return run_solve(solve_path, scheme, pt_db, p_ref, solve_ov);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
