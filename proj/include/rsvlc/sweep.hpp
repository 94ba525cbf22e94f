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

#pragma once

// Power sweeps over schemes and the files they produce.
//
// A sweep solves every (scheme, P_t) pair independently on a small worker pool. A failed solve is
// stored as a record with its error message; it never aborts the sweep. Records are sorted by
// (scheme, P_t) before they are returned, so output does not depend on scheduling.
//
// Output directory layout:
//   <scheme>.csv     pt_db,sum_rate
//   combined.csv     pt_db,<scheme>...
//   records.csv      every record field except timings
//   trace.jsonl      per-iteration SCA records of every solve
//   manifest.json    spec echo, versions, seed, timings
//
// Everything except trace.jsonl and manifest.json is a pure function of (spec, seed).

#include "rsvlc/baselines.hpp"
#include "rsvlc/io.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace rsvlc
{
    inline constexpr int record_schema_version = 1;
    inline constexpr const char *library_version = "1.0.0";

    struct SweepSpec
    {
        ScenarioConfig scenario;
        std::string scenario_path;   // as written in the spec file, for the manifest
        std::vector<double> pt_db;   // strictly increasing
        double p_ref = 1.0;          // P_t = p_ref * 10^(dB / 10)
        std::vector<Scheme> schemes{Scheme::rsma, Scheme::sdma, Scheme::noma};
        ScaOptions options;
        std::string output_dir;
        int jobs = 1;
    };

    // Empty iff the spec can be run.
    inline std::vector<std::string> validate_sweep(const SweepSpec &s)
    {
        std::vector<std::string> v;
        if (s.pt_db.empty())
            v.push_back("pt_db must not be empty");
        for (std::size_t i = 1; i < s.pt_db.size(); ++i)
            if (!(s.pt_db[i] > s.pt_db[i - 1]))
                v.push_back("pt_db must be strictly increasing");
        for (double d : s.pt_db)
            if (!std::isfinite(d))
                v.push_back("pt_db entries must be finite");
        if (!(s.p_ref > 0.0))
            v.push_back("p_ref must be positive");
        if (s.schemes.empty())
            v.push_back("schemes must not be empty");
        for (std::size_t i = 0; i < s.schemes.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (s.schemes[i] == s.schemes[j])
                    v.push_back(std::string("schemes lists '") + to_string(s.schemes[i]) + "' twice");
        if (s.jobs < 1)
            v.push_back("jobs must be at least 1");
        if (s.options.max_iter < 1)
            v.push_back("max_iter must be at least 1");
        if (!(s.options.stall_tol > 0.0))
            v.push_back("tol must be positive");
        for (auto &e : validate_scenario(s.scenario))
            v.push_back("scenario." + e);
        return v;
    }

    // Loads a sweep spec; the scenario path is resolved relative to the spec file.
    //   { "scenario": "default.json", "pt_db": [0, 15, 30], "schemes": ["rsma"], "seed": 42,
    //     "p_ref": 1, "max_iter": 50, "tol": 1e-4, "output": "out", "jobs": 1 }
    inline SweepSpec load_sweep_spec(const std::string &path)
    {
        const json j = detail::read_json_file(path);
        detail::reject_unknown(j, {"scenario", "pt_db", "p_ref", "schemes", "seed", "max_iter", "tol", "output", "jobs"}, "sweep");
        if (!j.contains("scenario") || !j.contains("pt_db"))
            throw ConfigError("sweep: 'scenario' and 'pt_db' are required");
        SweepSpec s;
        try
        {
            s.scenario_path = j["scenario"].get<std::string>();
            const auto base = std::filesystem::path(path).parent_path();
            s.scenario = load_scenario((base / s.scenario_path).string());
            s.pt_db = j["pt_db"].get<std::vector<double>>();
            s.p_ref = j.value("p_ref", s.p_ref);
            if (j.contains("schemes"))
            {
                s.schemes.clear();
                for (const auto &name : j["schemes"].get<std::vector<std::string>>())
                    s.schemes.push_back(parse_scheme(name));
            }
            s.options.seed = j.value("seed", s.options.seed);
            s.options.max_iter = j.value("max_iter", s.options.max_iter);
            s.options.stall_tol = j.value("tol", s.options.stall_tol);
            s.output_dir = j.value("output", std::string("out"));
            s.jobs = j.value("jobs", s.jobs);
        }
        catch (const json::exception &e)
        {
            throw ConfigError(std::string("sweep: ") + e.what());
        }
        return s;
    }

    struct SweepRecord
    {
        int schema_version = record_schema_version;
        Scheme scheme = Scheme::rsma;
        double pt_db = 0.0;
        double pt = 0.0;
        std::string status = "ok"; // "ok" or the error message
        double sum_rate = std::nan("");
        std::vector<double> user_rates;
        double sdr_objective = std::nan("");
        int iterations = 0;
        int restarts = 0;
        double solve_seconds = 0.0;
        double power_slack = std::nan(""); // normalized, >= 0 when feasible
        double peak_slack = std::nan("");
        bool feasible = false;             // both slacks >= -1e-9
        double rank_one_ratio = std::nan("");
        ScaState trace;

        bool ok() const { return status == "ok"; }
    };

    inline constexpr double feasibility_tolerance = 1e-9;

    // One solve of one scheme at electrical budget p_ref * 10^(pt_db / 10). Errors become records.
    inline SweepRecord solve_point(const ScenarioConfig &base, const ChannelMatrix &ch, std::span<const EntropyParams> entropy,
                                   Scheme scheme, double pt_db, double p_ref, const ScaOptions &opt)
    {
        SweepRecord r;
        r.scheme = scheme;
        r.pt_db = pt_db;
        r.pt = p_ref * std::pow(10.0, pt_db / 10.0);
        const auto t0 = std::chrono::steady_clock::now();
        try
        {
            ScenarioConfig cfg = base;
            cfg.electrical_budget = r.pt;
            SchemeResult res;
            switch (scheme)
            {
            case Scheme::rsma: res = sca_solve(cfg, ch, entropy, opt); break;
            case Scheme::sdma: res = solve_sdma(cfg, ch, entropy, opt).result; break;
            case Scheme::noma: res = solve_noma(cfg, ch, entropy, opt).result; break;
            }
            r.sum_rate = res.sum_rate;
            r.user_rates = res.user_rates;
            r.sdr_objective = res.sdr_objective;
            r.iterations = res.state.iteration;
            r.restarts = res.restarts;
            r.power_slack = res.extraction.power_slack;
            r.peak_slack = res.extraction.peak_slack;
            r.feasible = r.power_slack >= -feasibility_tolerance && r.peak_slack >= -feasibility_tolerance;
            r.rank_one_ratio = res.extraction.rank_one_ratio;
            r.trace = std::move(res.state);
        }
        catch (const std::exception &e)
        {
            r.status = e.what();
        }
        r.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }

    struct MonotonicityFlag
    {
        Scheme scheme;
        double from_db, to_db;
        double drop; // sum-rate decrease, > tolerance
    };

    struct SweepResult
    {
        std::vector<SweepRecord> records; // sorted by (scheme order in spec, pt_db)
        std::vector<MonotonicityFlag> monotonicity;
        double wall_seconds = 0.0;

        std::size_t failures() const
        {
            return std::size_t(std::count_if(records.begin(), records.end(), [](const SweepRecord &r) { return !r.ok(); }));
        }
    };

    inline constexpr double monotonicity_tolerance = 1e-3;

    // Flags every consecutive pair of successful points whose sum rate drops by more than `tol`.
    inline std::vector<MonotonicityFlag> audit_monotonicity(const std::vector<SweepRecord> &records, double tol = monotonicity_tolerance)
    {
        std::vector<MonotonicityFlag> flags;
        for (std::size_t i = 1; i < records.size(); ++i)
        {
            const auto &a = records[i - 1], &b = records[i];
            if (a.scheme == b.scheme && a.ok() && b.ok() && b.sum_rate < a.sum_rate - tol)
                flags.push_back({a.scheme, a.pt_db, b.pt_db, a.sum_rate - b.sum_rate});
        }
        return flags;
    }

    inline SweepResult run_sweep(const SweepSpec &spec)
    {
        if (auto errs = validate_sweep(spec); !errs.empty())
            throw ConfigError("invalid sweep: " + errs.front());

        const auto t0 = std::chrono::steady_clock::now();
        const ChannelMatrix ch = generate_channel(spec.scenario);
        const std::vector<EntropyParams> entropy = solve_entropy_params(spec.scenario.signal_amplitude, spec.scenario.signal_variance);

        struct Job
        {
            std::size_t scheme_pos, point;
        };
        std::vector<Job> jobs;
        for (std::size_t s = 0; s < spec.schemes.size(); ++s)
            for (std::size_t p = 0; p < spec.pt_db.size(); ++p)
                jobs.push_back({s, p});

        SweepResult out;
        out.records.resize(jobs.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();)
                out.records[i] = solve_point(spec.scenario, ch, entropy, spec.schemes[jobs[i].scheme_pos],
                                             spec.pt_db[jobs[i].point], spec.p_ref, spec.options);
        };
        const int n = std::min<int>(spec.jobs, int(jobs.size()));
        std::vector<std::thread> pool;
        for (int t = 1; t < n; ++t)
            pool.emplace_back(worker);
        worker();
        for (auto &t : pool)
            t.join();

        // jobs were laid out in (scheme, point) order, so the records already are
        out.monotonicity = audit_monotonicity(out.records);
        out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }

    // ---------------------------------------------------------------- output

    namespace detail
    {
        inline std::string num(double v)
        {
            if (std::isnan(v))
                return "nan";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        inline std::ofstream open_out(const std::filesystem::path &p)
        {
            std::ofstream f(p, std::ios::binary);
            if (!f)
                throw Error("cannot write '" + p.string() + "'");
            return f;
        }

        inline std::string csv_field(const std::string &s)
        {
            if (s.find_first_of(",\"\n") == std::string::npos)
                return s;
            std::string q = "\"";
            for (char c : s)
                q += c == '"' ? std::string("\"\"") : std::string(1, c);
            return q + "\"";
        }

        inline void make_dir(const std::string &dir)
        {
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            if (!std::filesystem::is_directory(dir))
                throw Error("cannot create output directory '" + dir + "'");
        }
    }

    // Per-scheme tables plus one combined table; returns the written paths.
    inline std::vector<std::string> emit_plotdata(const std::vector<SweepRecord> &records, const std::string &dir)
    {
        if (records.empty())
            throw Error("emit_plotdata: no records");
        detail::make_dir(dir);

        std::vector<Scheme> schemes;
        std::vector<double> grid;
        for (const auto &r : records)
        {
            if (std::find(schemes.begin(), schemes.end(), r.scheme) == schemes.end())
                schemes.push_back(r.scheme);
            if (std::find(grid.begin(), grid.end(), r.pt_db) == grid.end())
                grid.push_back(r.pt_db);
        }
        std::sort(grid.begin(), grid.end());

        std::vector<std::string> written;
        for (Scheme s : schemes)
        {
            const auto path = std::filesystem::path(dir) / (std::string(to_string(s)) + ".csv");
            auto f = detail::open_out(path);
            f << "pt_db,sum_rate\n";
            for (const auto &r : records)
                if (r.scheme == s)
                    f << detail::num(r.pt_db) << ',' << detail::num(r.sum_rate) << '\n';
            written.push_back(path.string());
        }

        const auto path = std::filesystem::path(dir) / "combined.csv";
        auto f = detail::open_out(path);
        f << "pt_db";
        for (Scheme s : schemes)
            f << ',' << to_string(s);
        f << '\n';
        for (double db : grid)
        {
            f << detail::num(db);
            for (Scheme s : schemes)
            {
                double v = std::nan("");
                for (const auto &r : records)
                    if (r.scheme == s && r.pt_db == db)
                        v = r.sum_rate;
                f << ',' << detail::num(v);
            }
            f << '\n';
        }
        written.push_back(path.string());
        return written;
    }

    inline void write_records_csv(const std::vector<SweepRecord> &records, const std::string &path)
    {
        auto f = detail::open_out(path);
        f << "schema_version,scheme,pt_db,pt,status,sum_rate,user_rates,sdr_objective,iterations,restarts,"
             "power_slack,peak_slack,feasible,rank_one_ratio\n";
        for (const auto &r : records)
        {
            std::string rates;
            for (std::size_t k = 0; k < r.user_rates.size(); ++k)
                rates += (k ? ";" : "") + detail::num(r.user_rates[k]);
            f << r.schema_version << ',' << to_string(r.scheme) << ',' << detail::num(r.pt_db) << ',' << detail::num(r.pt) << ','
              << detail::csv_field(r.status) << ',' << detail::num(r.sum_rate) << ',' << rates << ','
              << detail::num(r.sdr_objective) << ',' << r.iterations << ',' << r.restarts << ',' << detail::num(r.power_slack)
              << ',' << detail::num(r.peak_slack) << ',' << (r.feasible ? 1 : 0) << ',' << detail::num(r.rank_one_ratio) << '\n';
        }
    }

    inline void write_traces(const std::vector<SweepRecord> &records, const std::string &path)
    {
        auto f = detail::open_out(path);
        for (const auto &r : records)
            for (const auto &it : r.trace.records)
                f << json{{"scheme", to_string(r.scheme)},     {"pt_db", r.pt_db},
                          {"m", it.m},                         {"objective", it.objective},
                          {"max_violation", it.max_violation}, {"solve_seconds", it.solve_seconds},
                          {"newton_steps", it.newton_steps}}
                         .dump()
                  << '\n';
    }

    inline void write_manifest(const SweepSpec &spec, const SweepResult &res, const std::string &path)
    {
        json schemes = json::array(), timings = json::array(), flags = json::array();
        for (Scheme s : spec.schemes)
            schemes.push_back(to_string(s));
        for (const auto &r : res.records)
            timings.push_back({{"scheme", to_string(r.scheme)}, {"pt_db", r.pt_db}, {"solve_seconds", r.solve_seconds}});
        for (const auto &m : res.monotonicity)
            flags.push_back({{"scheme", to_string(m.scheme)}, {"from_db", m.from_db}, {"to_db", m.to_db}, {"drop", m.drop}});
        const json j{{"schema_version", record_schema_version},
                     {"library_version", library_version},
                     {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                           std::to_string(EIGEN_MINOR_VERSION)},
                     {"spec",
                      {{"scenario", spec.scenario_path},
                       {"scenario_config", scenario_to_json(spec.scenario)},
                       {"pt_db", spec.pt_db},
                       {"p_ref", spec.p_ref},
                       {"schemes", schemes},
                       {"seed", spec.options.seed},
                       {"max_iter", spec.options.max_iter},
                       {"tol", spec.options.stall_tol},
                       {"jobs", spec.jobs}}},
                     {"records", res.records.size()},
                     {"failures", res.failures()},
                     {"monotonicity_flags", flags},
                     {"wall_seconds", res.wall_seconds},
                     {"timings", timings}};
        auto f = detail::open_out(path);
        f << j.dump(2) << '\n';
    }

    // All sweep outputs into `dir`.
    inline void write_sweep_outputs(const SweepSpec &spec, const SweepResult &res, const std::string &dir)
    {
        emit_plotdata(res.records, dir);
        const std::filesystem::path d(dir);
        write_records_csv(res.records, (d / "records.csv").string());
        write_traces(res.records, (d / "trace.jsonl").string());
        write_manifest(spec, res, (d / "manifest.json").string());
    }
}
