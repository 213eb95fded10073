#include "burrsim/session/config.hpp"

#include "burrsim/core/errors.hpp"
#include "burrsim/core/text.hpp"

#include <cmath>
#include <fstream>

namespace burrsim {

using nlohmann::json;

namespace {

void check(bool ok, const std::string& key, const std::string& what)
{
    if (!ok) {
        fail(ErrorKind::Validation, "config key '" + key + "': " + what);
    }
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

void SessionConfig::validate() const
{
    check(finite_positive(tick_rate_hz), "tick_rate_hz", "must be > 0");
    check(!burrs.empty(), "burrs", "catalog may not be empty");
    for (std::size_t i = 0; i < burrs.size(); ++i) {
        check(finite_positive(burrs[i].radius_mm), "burrs[" + std::to_string(i) + "].radius_mm", "must be > 0");
        check(finite_positive(burrs[i].brr), "burrs[" + std::to_string(i) + "].brr", "must be > 0");
    }
    check(initial_burr < burrs.size(), "initial_burr", "index out of range");
    check(finite_positive(audio.p_max), "audio.p_max", "must be > 0");
    check(finite_positive(audio.F_max), "audio.F_max", "must be > 0");
    check(std::isfinite(haptic.A_drill) && haptic.A_drill >= 0.0, "haptic.A_drill", "must be finite and >= 0");
    check(finite_positive(haptic.f), "haptic.f", "must be > 0");
    check(finite_positive(haptic.k_c), "haptic.k_c", "must be > 0");
    check(!sensitive.contains(0), "sensitive_labels", "label 0 is air");
    for (const auto& [label, h] : hardness) {
        check(finite_positive(h), "hardness." + std::to_string(label), "must be > 0");
    }
    check(batch_size >= 1, "batch_size", "must be >= 1");
    check(finite_positive(force_sample_rate_hz), "force_sample_rate_hz", "must be > 0");
    check(std::isfinite(kinematics_rate_hz) && kinematics_rate_hz >= 0.0, "kinematics_rate_hz", "must be >= 0");
}

DrillModel SessionConfig::drill_model() const
{
    DrillModel m;
    m.audio = audio;
    m.haptic = haptic;
    m.sensitive = sensitive;
    m.hardness = hardness;
    return m;
}

json to_json(const SessionConfig& cfg)
{
    json burrs = json::array();
    for (const Burr& b : cfg.burrs) {
        burrs.push_back({{"radius_mm", b.radius_mm}, {"tip", std::string(to_string(b.tip))}, {"brr", b.brr}});
    }
    json hardness = json::object();
    for (const auto& [label, h] : cfg.hardness) {
        hardness[std::to_string(label)] = h;
    }
    return {{"tick_rate_hz", cfg.tick_rate_hz},
            {"burrs", burrs},
            {"initial_burr", cfg.initial_burr},
            {"audio", {{"p_max", cfg.audio.p_max}, {"F_max", cfg.audio.F_max}}},
            {"haptic", {{"A_drill", cfg.haptic.A_drill}, {"f", cfg.haptic.f}, {"k_c", cfg.haptic.k_c}}},
            {"sensitive_labels", cfg.sensitive},
            {"hardness", hardness},
            {"batch_size", cfg.batch_size},
            {"force_sample_rate_hz", cfg.force_sample_rate_hz},
            {"kinematics_rate_hz", cfg.kinematics_rate_hz}};
}

SessionConfig config_from_json(const json& j)
{
    SessionConfig cfg;
    if (!j.is_object()) {
        fail(ErrorKind::Validation, "config must be a JSON object");
    }
    static const std::set<std::string> known{"tick_rate_hz", "burrs", "initial_burr", "audio", "haptic",
                                             "sensitive_labels", "hardness", "batch_size", "force_sample_rate_hz",
                                             "kinematics_rate_hz"};
    for (const auto& [key, _] : j.items()) {
        check(known.contains(key), key, "unknown key");
    }
    try {
        cfg.tick_rate_hz = j.value("tick_rate_hz", cfg.tick_rate_hz);
        if (j.contains("burrs")) {
            cfg.burrs.clear();
            for (const auto& b : j.at("burrs")) {
                cfg.burrs.push_back({b.at("radius_mm").get<double>(), parse_burr_tip(b.at("tip").get<std::string>()),
                                     b.at("brr").get<double>()});
            }
            if (!j.contains("initial_burr")) {
                // Largest cutting burr, else the first entry.
                std::uint32_t best = 0;
                double best_r = -1.0;
                for (std::uint32_t i = 0; i < cfg.burrs.size(); ++i) {
                    if (cfg.burrs[i].tip == BurrTip::Cutting && cfg.burrs[i].radius_mm > best_r) {
                        best = i;
                        best_r = cfg.burrs[i].radius_mm;
                    }
                }
                cfg.initial_burr = best;
            }
        }
        cfg.initial_burr = j.value("initial_burr", cfg.initial_burr);
        if (j.contains("audio")) {
            const auto& a = j.at("audio");
            cfg.audio.p_max = a.value("p_max", cfg.audio.p_max);
            cfg.audio.F_max = a.value("F_max", cfg.audio.F_max);
        }
        if (j.contains("haptic")) {
            const auto& h = j.at("haptic");
            cfg.haptic.A_drill = h.value("A_drill", cfg.haptic.A_drill);
            cfg.haptic.f = h.value("f", cfg.haptic.f);
            cfg.haptic.k_c = h.value("k_c", cfg.haptic.k_c);
        }
        if (j.contains("sensitive_labels")) {
            cfg.sensitive = j.at("sensitive_labels").get<std::set<Label>>();
        }
        if (j.contains("hardness")) {
            for (const auto& [key, value] : j.at("hardness").items()) {
                auto label = text::parse_int(key);
                check(label && *label >= 1 && *label <= 0xFFFF, "hardness." + key, "key must be a label value");
                cfg.hardness[static_cast<Label>(*label)] = value.get<double>();
            }
        }
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.force_sample_rate_hz = j.value("force_sample_rate_hz", cfg.force_sample_rate_hz);
        cfg.kinematics_rate_hz = j.value("kinematics_rate_hz", cfg.kinematics_rate_hz);
    } catch (const json::exception& e) {
        fail(ErrorKind::Validation, std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

SessionConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::Io, "cannot open config " + path.string());
    }
    try {
        return config_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

} // namespace burrsim
