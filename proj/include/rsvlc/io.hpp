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

// JSON scenario files. Unknown keys are rejected so that typos do not silently fall back to defaults.
//
//   {
//     "room_dims": [7, 7, 5],
//     "led_positions": [[1.75, 1.75, 5], ...],
//     "user_positions": [[3, 3.5, 0.85], ...],
//     "noise_variance": [1e-13, 1e-13],
//     "signal_amplitude": [1, 1, 1],
//     "signal_variance": [0.333, 0.333, 0.333],
//     ... optional physical constants, see ScenarioConfig
//   }

#include "rsvlc/scenario.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace rsvlc
{
    using json = nlohmann::json;

    // Malformed or unreadable configuration file
    struct ConfigError : Error
    {
        using Error::Error;
    };

    namespace detail
    {
        inline void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &what)
        {
            if (!j.is_object())
                throw ConfigError(what + ": expected a JSON object");
            for (auto it = j.begin(); it != j.end(); ++it)
                if (!known.count(it.key()))
                    throw ConfigError(what + ": unknown key '" + it.key() + "'");
        }

        inline Eigen::Vector3d point(const json &j, const std::string &what)
        {
            if (!j.is_array() || j.size() != 3)
                throw ConfigError(what + ": expected [x, y, z]");
            return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
        }

        inline std::vector<Eigen::Vector3d> points(const json &j, const std::string &what)
        {
            if (!j.is_array())
                throw ConfigError(what + ": expected an array of points");
            std::vector<Eigen::Vector3d> out;
            for (std::size_t i = 0; i < j.size(); ++i)
                out.push_back(point(j[i], what + "[" + std::to_string(i) + "]"));
            return out;
        }

        inline json to_json(const Eigen::Vector3d &p) { return json::array({p.x(), p.y(), p.z()}); }

        inline json read_json_file(const std::string &path)
        {
            std::ifstream in(path);
            if (!in)
                throw ConfigError("cannot open '" + path + "'");
            try
            {
                return json::parse(in);
            }
            catch (const json::parse_error &e)
            {
                throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
            }
        }
    }

    inline ScenarioConfig scenario_from_json(const json &j)
    {
        static const std::set<std::string> known{
            "room_dims",       "led_positions",    "user_positions", "lambertian_order", "receiver_area",
            "fov_semi_angle",  "optical_filter_gain", "concentrator_gain", "noise_variance", "max_current",
            "dc_bias",         "signal_amplitude", "signal_variance", "electrical_budget"};
        detail::reject_unknown(j, known, "scenario");
        for (const char *req : {"led_positions", "user_positions", "noise_variance", "signal_amplitude", "signal_variance"})
            if (!j.contains(req))
                throw ConfigError(std::string("scenario: missing required key '") + req + "'");

        ScenarioConfig cfg;
        try
        {
            if (j.contains("room_dims"))
                cfg.room_dims = detail::point(j["room_dims"], "room_dims");
            cfg.led_positions = detail::points(j["led_positions"], "led_positions");
            cfg.user_positions = detail::points(j["user_positions"], "user_positions");
            cfg.lambertian_order = j.value("lambertian_order", cfg.lambertian_order);
            cfg.receiver_area = j.value("receiver_area", cfg.receiver_area);
            cfg.fov_semi_angle = j.value("fov_semi_angle", cfg.fov_semi_angle);
            cfg.optical_filter_gain = j.value("optical_filter_gain", cfg.optical_filter_gain);
            cfg.concentrator_gain = j.value("concentrator_gain", cfg.concentrator_gain);
            cfg.noise_variance = j["noise_variance"].get<std::vector<double>>();
            cfg.max_current = j.value("max_current", cfg.max_current);
            cfg.dc_bias = j.value("dc_bias", cfg.dc_bias);
            cfg.signal_amplitude = j["signal_amplitude"].get<std::vector<double>>();
            cfg.signal_variance = j["signal_variance"].get<std::vector<double>>();
            cfg.electrical_budget = j.value("electrical_budget", cfg.electrical_budget);
        }
        catch (const json::exception &e)
        {
            throw ConfigError(std::string("scenario: ") + e.what());
        }
        return cfg;
    }

    inline json scenario_to_json(const ScenarioConfig &cfg)
    {
        json leds = json::array(), users = json::array();
        for (const auto &p : cfg.led_positions)
            leds.push_back(detail::to_json(p));
        for (const auto &p : cfg.user_positions)
            users.push_back(detail::to_json(p));
        return {{"room_dims", detail::to_json(cfg.room_dims)},
                {"led_positions", leds},
                {"user_positions", users},
                {"lambertian_order", cfg.lambertian_order},
                {"receiver_area", cfg.receiver_area},
                {"fov_semi_angle", cfg.fov_semi_angle},
                {"optical_filter_gain", cfg.optical_filter_gain},
                {"concentrator_gain", cfg.concentrator_gain},
                {"noise_variance", cfg.noise_variance},
                {"max_current", cfg.max_current},
                {"dc_bias", cfg.dc_bias},
                {"signal_amplitude", cfg.signal_amplitude},
                {"signal_variance", cfg.signal_variance},
                {"electrical_budget", cfg.electrical_budget}};
    }

    inline ScenarioConfig load_scenario(const std::string &path) { return scenario_from_json(detail::read_json_file(path)); }
}
