#include "secdoar/simgen.hpp"

#include "secdoar/errors.hpp"
#include "secdoar/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>
#include <tuple>

namespace secdoar::simgen {

namespace {

// All draws go through these helpers; mt19937_64 output is specified by the
// standard, so traces are reproducible across platforms.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    return n == 0 ? 0 : rng() % n;
}

std::vector<std::string> source_pool() {
    std::vector<std::string> pool;
    pool.reserve(508);
    for (int i = 1; i <= 254; ++i)
        pool.push_back("203.0.113." + std::to_string(i));
    for (int i = 1; i <= 254; ++i)
        pool.push_back("198.51.100." + std::to_string(i));
    return pool;
}

double round_us(double ts) { return std::round(ts * 1e6) / 1e6; }

std::string zeek_ts(double ts) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", ts);
    return buf;
}

std::string snort_ts(double ts) {
    const std::string iso = format_iso8601_utc(std::floor(ts));
    const long micros = std::lround((ts - std::floor(ts)) * 1e6);
    char buf[40];
    // iso is YYYY-MM-DDTHH:MM:SS
    std::snprintf(buf, sizeof(buf), "%s/%s-%s.%06ld", iso.substr(5, 2).c_str(),
                  iso.substr(8, 2).c_str(), iso.substr(11, 8).c_str(), micros);
    return buf;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

} // namespace

nlohmann::ordered_json ScenarioSpec::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json ts = nlohmann::ordered_json::array();
    for (const auto& [host, port] : targets)
        ts.push_back({{"host", host}, {"port", port}});
    j["targets"] = std::move(ts);
    nlohmann::ordered_json is = nlohmann::ordered_json::array();
    for (const auto& inj : injections) {
        is.push_back({{"start", inj.start},
                      {"duration", inj.duration},
                      {"rate", inj.rate},
                      {"n_sources", inj.n_sources},
                      {"target", {{"host", inj.target_host}, {"port", inj.target_port}}},
                      {"failure_fraction", inj.failure_fraction}});
    }
    j["injections"] = std::move(is);
    return j;
}

ScenarioSpec ScenarioSpec::from_json(const nlohmann::json& j) {
    ScenarioSpec s;
    if (j.contains("targets")) {
        for (const auto& t : j.at("targets"))
            s.targets.emplace_back(t.at("host").get<std::string>(),
                                   t.at("port").get<int>());
    }
    if (j.contains("injections")) {
        for (const auto& ij : j.at("injections")) {
            InjectionSpec inj;
            inj.start = ij.at("start").get<double>();
            inj.duration = ij.at("duration").get<double>();
            inj.rate = ij.at("rate").get<double>();
            inj.n_sources = ij.at("n_sources").get<int>();
            inj.target_host = ij.at("target").at("host").get<std::string>();
            inj.target_port = ij.at("target").at("port").get<int>();
            if (ij.contains("failure_fraction"))
                inj.failure_fraction = ij.at("failure_fraction").get<double>();
            s.injections.push_back(std::move(inj));
        }
    }
    return s;
}

EmitFormat emit_format_from_string(std::string_view s) {
    if (s == "zeek")
        return EmitFormat::zeek;
    if (s == "snort")
        return EmitFormat::snort;
    if (s == "jsonl")
        return EmitFormat::jsonl;
    throw ConfigError("unknown emit format: " + std::string(s));
}

std::string emit_format_to_string(EmitFormat f) {
    switch (f) {
    case EmitFormat::zeek: return "zeek";
    case EmitFormat::snort: return "snort";
    case EmitFormat::jsonl: return "jsonl";
    }
    return {};
}

std::string tool_id_for(EmitFormat f) {
    switch (f) {
    case EmitFormat::zeek: return "zeek";
    case EmitFormat::snort: return "snort";
    case EmitFormat::jsonl: return "limacharlie";
    }
    return {};
}

std::vector<TrafficRecord> generate_trace(std::uint64_t seed, double duration_s,
                                          double baseline_rate,
                                          const ScenarioSpec& scenario,
                                          EmitFormat shape) {
    if (duration_s < 0 || baseline_rate < 0)
        throw Error("duration and baseline rate must be non-negative");
    const auto pool = source_pool();
    for (const auto& inj : scenario.injections) {
        if (inj.start < 0 || inj.duration <= 0 ||
            inj.start + inj.duration > duration_s)
            throw InvalidInjection("injection outside trace horizon");
        if (inj.rate < 0 || inj.n_sources < 1 ||
            inj.n_sources > static_cast<int>(pool.size()))
            throw InvalidInjection("bad injection rate or source count");
        if (inj.failure_fraction < 0 || inj.failure_fraction > 1)
            throw InvalidInjection("failure_fraction must be within [0,1]");
    }

    std::mt19937_64 rng(seed);
    const std::string tool = tool_id_for(shape);
    std::vector<TrafficRecord> out;

    auto shape_record = [&](double ts, std::string src, int sport,
                            const std::string& dst, int dport, bool failed_login) {
        TrafficRecord r;
        r.ts = round_us(ts);
        r.src_ip = std::move(src);
        r.src_port = sport;
        r.dst_host = dst;
        r.dst_port = dport;
        r.protocol = Protocol{Protocol::Kind::tcp, {}};
        r.tool_id = tool;
        switch (shape) {
        case EmitFormat::zeek:
            // conn logs carry volumes but no login outcome or alert priority
            r.bytes = 64 + static_cast<std::int64_t>(uniform_below(rng, 1400));
            break;
        case EmitFormat::snort:
            r.priority = 2;
            if (failed_login)
                r.auth = AuthInfo{"unknown", AuthInfo::Outcome::failure};
            break;
        case EmitFormat::jsonl:
            r.bytes = 64 + static_cast<std::int64_t>(uniform_below(rng, 1400));
            if (failed_login)
                r.auth = AuthInfo{"cred-" + std::to_string(uniform_below(rng, 64)),
                                  AuthInfo::Outcome::failure};
            break;
        }
        out.push_back(std::move(r));
    };

    // Baseline: Poisson arrivals spread over the scenario targets.
    if (baseline_rate > 0 && !scenario.targets.empty()) {
        double t = 0.0;
        while (true) {
            const double u = uniform01(rng);
            t += -std::log(1.0 - u) / baseline_rate;
            if (t >= duration_s)
                break;
            const auto& [host, port] =
                scenario.targets[uniform_below(rng, scenario.targets.size())];
            std::string src = pool[uniform_below(rng, pool.size())];
            const int sport = 1024 + static_cast<int>(uniform_below(rng, 60000));
            shape_record(t, std::move(src), sport, host, port, false);
        }
    }

    // Injections: a fixed budget per one-second stratum keeps per-window
    // counts deterministic; arrival offsets stay uniform inside the stratum.
    for (const auto& inj : scenario.injections) {
        std::vector<std::string> shuffled = pool;
        for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
            const std::size_t j = uniform_below(rng, i + 1);
            std::swap(shuffled[i], shuffled[j]);
        }
        shuffled.resize(static_cast<std::size_t>(inj.n_sources));
        double offset = 0.0;
        while (offset < inj.duration) {
            const double w_start = inj.start + offset;
            const double w_len = std::min(1.0, inj.duration - offset);
            const long count = std::lround(inj.rate * w_len);
            for (long i = 0; i < count; ++i) {
                const double ts = w_start + uniform01(rng) * w_len;
                std::string src = shuffled[static_cast<std::size_t>(i) %
                                           shuffled.size()];
                const int sport = 1024 + static_cast<int>(uniform_below(rng, 60000));
                const bool failed = uniform01(rng) < inj.failure_fraction;
                shape_record(ts, std::move(src), sport, inj.target_host,
                             inj.target_port, failed);
            }
            offset += 1.0;
        }
    }

    std::sort(out.begin(), out.end(), [](const TrafficRecord& a, const TrafficRecord& b) {
        return std::tie(a.ts, a.src_ip, a.src_port, a.dst_host, a.dst_port) <
               std::tie(b.ts, b.src_ip, b.src_port, b.dst_host, b.dst_port);
    });
    return out;
}

std::string emit_trace(const std::vector<TrafficRecord>& records, EmitFormat format) {
    std::string out;
    switch (format) {
    case EmitFormat::zeek: {
        out += "#separator \\x09\n";
        out += "#path\tconn\n";
        out += "#fields\tts\tid.orig_h\tid.orig_p\tid.resp_h\tid.resp_p\tproto\torig_bytes\n";
        out += "#types\ttime\taddr\tport\taddr\tport\tenum\tcount\n";
        for (const auto& r : records) {
            out += zeek_ts(r.ts);
            out += '\t';
            out += r.src_ip;
            out += '\t';
            out += std::to_string(r.src_port);
            out += '\t';
            out += r.dst_host;
            out += '\t';
            out += std::to_string(r.dst_port);
            out += '\t';
            out += lower(r.protocol.to_string());
            out += '\t';
            out += r.bytes ? std::to_string(*r.bytes) : "-";
            out += '\n';
        }
        break;
    }
    case EmitFormat::snort: {
        for (const auto& r : records) {
            const bool failed =
                r.auth && r.auth->outcome == AuthInfo::Outcome::failure;
            const char* msg = failed ? "Failed login attempt" : "Potential DoS";
            const char* cls =
                failed ? "Failed Login Attempt" : "Attempted Denial of Service";
            out += snort_ts(r.ts);
            out += "  [**] [1:1000001:0] ";
            out += msg;
            out += " [**] [Classification: ";
            out += cls;
            out += "] [Priority: ";
            out += std::to_string(r.priority.value_or(2));
            out += "] {";
            out += upper(r.protocol.to_string());
            out += "} ";
            out += r.src_ip + ":" + std::to_string(r.src_port);
            out += " -> ";
            out += r.dst_host + ":" + std::to_string(r.dst_port);
            out += '\n';
        }
        break;
    }
    case EmitFormat::jsonl: {
        for (const auto& r : records) {
            out += ingest::record_to_jsonl(r);
            out += '\n';
        }
        break;
    }
    }
    return out;
}

} // namespace secdoar::simgen
