#include "secdoar/core.hpp"

#include "secdoar/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace secdoar {

namespace {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yr + (m <= 2));
}

bool parse_uint(std::string_view s, unsigned& out) {
    if (s.empty())
        return false;
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        return false;
    out = v;
    return true;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isdigit(c);
    });
}

std::string strip_leading_zeros(std::string_view s) {
    std::size_t i = 0;
    while (i + 1 < s.size() && s[i] == '0')
        ++i;
    return std::string(s.substr(i));
}

} // namespace

std::optional<double> parse_iso8601_utc(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SS[.frac][Z]
    if (s.size() >= 1 && s.back() == 'Z')
        s.remove_suffix(1);
    if (s.size() < 19)
        return std::nullopt;
    if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
        s[13] != ':' || s[16] != ':')
        return std::nullopt;
    unsigned y, mo, d, h, mi, sec;
    if (!parse_uint(s.substr(0, 4), y) || !parse_uint(s.substr(5, 2), mo) ||
        !parse_uint(s.substr(8, 2), d) || !parse_uint(s.substr(11, 2), h) ||
        !parse_uint(s.substr(14, 2), mi) || !parse_uint(s.substr(17, 2), sec))
        return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60)
        return std::nullopt;
    double frac = 0.0;
    if (s.size() > 19) {
        if (s[19] != '.' || s.size() == 20)
            return std::nullopt;
        std::string_view digits = s.substr(20);
        if (!all_digits(digits) || digits.size() > 9)
            return std::nullopt;
        double scale = 1.0;
        for (char c : digits) {
            scale /= 10.0;
            frac += (c - '0') * scale;
        }
    }
    const std::int64_t days = days_from_civil(static_cast<int>(y), mo, d);
    return static_cast<double>(days * 86400 + h * 3600 + mi * 60 + sec) + frac;
}

std::string format_iso8601_utc(double epoch_s) {
    const double whole = std::floor(epoch_s);
    double frac = epoch_s - whole;
    std::int64_t secs = static_cast<std::int64_t>(whole);
    std::int64_t days = secs / 86400;
    std::int64_t rem = secs % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y;
    unsigned mo, d;
    civil_from_days(days, y, mo, d);
    const int h = static_cast<int>(rem / 3600);
    const int mi = static_cast<int>((rem % 3600) / 60);
    const int sec = static_cast<int>(rem % 60);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", y, mo, d, h,
                  mi, sec);
    std::string out(buf);
    if (frac > 0.0) {
        long micros = std::lround(frac * 1e6);
        if (micros >= 1000000)
            micros = 999999;
        if (micros > 0) {
            std::snprintf(buf, sizeof(buf), ".%06ld", micros);
            std::string f(buf);
            while (f.back() == '0')
                f.pop_back();
            out += f;
        }
    }
    return out;
}

std::string canonical_ip(std::string_view ip) {
    const std::string low = lower(ip);
    if (low.find(':') != std::string::npos) {
        // IPv6-ish: strip leading zeros per group, keep "::" compression as-is.
        std::string out;
        std::string group;
        auto flush = [&] {
            if (all_digits(group) || group.find('.') == std::string::npos) {
                // hex group
                std::size_t i = 0;
                while (i + 1 < group.size() && group[i] == '0')
                    ++i;
                out += group.substr(i);
            } else {
                out += canonical_ip(group); // embedded IPv4 tail
            }
            group.clear();
        };
        for (char c : low) {
            if (c == ':') {
                flush();
                out += ':';
            } else {
                group += c;
            }
        }
        flush();
        return out;
    }
    // Dotted IPv4: strip per-octet leading zeros.
    bool dotted_numeric = !low.empty();
    for (char c : low) {
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.'))
            dotted_numeric = false;
    }
    if (dotted_numeric && low.find('.') != std::string::npos) {
        std::string out;
        std::string octet;
        for (char c : low) {
            if (c == '.') {
                out += strip_leading_zeros(octet);
                out += '.';
                octet.clear();
            } else {
                octet += c;
            }
        }
        out += strip_leading_zeros(octet);
        return out;
    }
    return low;
}

Protocol Protocol::from_string(std::string_view s) {
    const std::string low = lower(s);
    if (low == "tcp")
        return {Kind::tcp, {}};
    if (low == "udp")
        return {Kind::udp, {}};
    if (low == "icmp")
        return {Kind::icmp, {}};
    return {Kind::other, std::string(s)};
}

std::string Protocol::to_string() const {
    switch (kind) {
    case Kind::tcp: return "TCP";
    case Kind::udp: return "UDP";
    case Kind::icmp: return "ICMP";
    case Kind::other: return label;
    }
    return {};
}

std::vector<std::string> validate_record(const TrafficRecord& r) {
    std::vector<std::string> v;
    if (!(std::isfinite(r.ts)))
        v.push_back("ts not finite");
    else if (r.ts < 0)
        v.push_back("ts negative");
    if (r.src_port < 0 || r.src_port > 65535)
        v.push_back("src_port out of range 0-65535");
    if (r.dst_port < 0 || r.dst_port > 65535)
        v.push_back("dst_port out of range 0-65535");
    if (r.bytes && *r.bytes < 0)
        v.push_back("bytes negative");
    if (r.tool_id.empty())
        v.push_back("tool_id empty");
    return v;
}

std::string role_to_string(Role r) {
    switch (r) {
    case Role::orchestration: return "orchestration";
    case Role::analysis: return "analysis";
    case Role::reporting: return "reporting";
    }
    return {};
}

std::optional<Role> role_from_string(std::string_view s) {
    if (s == "orchestration")
        return Role::orchestration;
    if (s == "analysis")
        return Role::analysis;
    if (s == "reporting")
        return Role::reporting;
    return std::nullopt;
}

std::set<std::string> ToolDescriptor::produced_kinds() const {
    std::set<std::string> out;
    for (const auto& i : interfaces)
        out.insert(i.produces.begin(), i.produces.end());
    return out;
}

std::set<std::string> ToolDescriptor::consumed_kinds() const {
    std::set<std::string> out;
    for (const auto& i : interfaces)
        out.insert(i.consumes.begin(), i.consumes.end());
    return out;
}

std::vector<std::string> SecurityEvent::violations() const {
    std::vector<std::string> v;
    if (name.empty())
        v.push_back("name empty");
    if (producer.empty())
        v.push_back("producer empty");
    return v;
}

std::string tag_level_to_string(TagLevel t) {
    switch (t) {
    case TagLevel::trusted: return "trusted";
    case TagLevel::semi_trusted: return "semi_trusted";
    case TagLevel::public_: return "public";
    }
    return {};
}

std::optional<TagLevel> tag_level_from_string(std::string_view s) {
    if (s == "trusted")
        return TagLevel::trusted;
    if (s == "semi_trusted")
        return TagLevel::semi_trusted;
    if (s == "public")
        return TagLevel::public_;
    return std::nullopt;
}

std::string finding_kind_to_string(FindingKind k) {
    switch (k) {
    case FindingKind::dos: return "dos";
    case FindingKind::ddos: return "ddos";
    case FindingKind::access_breach: return "access_breach";
    case FindingKind::integrity_violation: return "integrity_violation";
    case FindingKind::availability_gap: return "availability_gap";
    case FindingKind::ratio_report: return "ratio_report";
    case FindingKind::none: return "none";
    }
    return {};
}

std::optional<FindingKind> finding_kind_from_string(std::string_view s) {
    for (FindingKind k :
         {FindingKind::dos, FindingKind::ddos, FindingKind::access_breach,
          FindingKind::integrity_violation, FindingKind::availability_gap,
          FindingKind::ratio_report, FindingKind::none}) {
        if (finding_kind_to_string(k) == s)
            return k;
    }
    return std::nullopt;
}

std::string severity_to_string(Severity s) {
    switch (s) {
    case Severity::info: return "info";
    case Severity::warn: return "warn";
    case Severity::critical: return "critical";
    }
    return {};
}

std::optional<Severity> severity_from_string(std::string_view s) {
    if (s == "info")
        return Severity::info;
    if (s == "warn")
        return Severity::warn;
    if (s == "critical")
        return Severity::critical;
    return std::nullopt;
}

nlohmann::ordered_json json_number(double v) {
    const double rounded = std::round(v * 1000.0) / 1000.0;
    if (rounded == std::floor(rounded) && std::abs(rounded) < 9.007e15)
        return static_cast<std::int64_t>(rounded);
    return rounded;
}

nlohmann::ordered_json finding_to_json(const Finding& f) {
    nlohmann::ordered_json j;
    j["metric_id"] = f.metric_id;
    j["window"] = {{"start", f.window.start_ts}, {"end", f.window.end_ts}};
    j["subject"] = f.subject;
    j["kind"] = finding_kind_to_string(f.kind);
    j["value"] = f.value;
    j["severity"] = severity_to_string(f.severity);
    nlohmann::ordered_json ev = nlohmann::ordered_json::array();
    for (const auto& r : f.evidence) {
        nlohmann::ordered_json e;
        e["ts"] = r.ts;
        e["src_ip"] = r.src_ip;
        e["detail"] = r.detail;
        ev.push_back(std::move(e));
    }
    j["evidence"] = std::move(ev);
    if (f.tag)
        j["tag"] = tag_level_to_string(*f.tag);
    return j;
}

Finding finding_from_json(const nlohmann::json& j) {
    Finding f;
    f.metric_id = j.at("metric_id").get<std::string>();
    f.window.start_ts = j.at("window").at("start").get<double>();
    f.window.end_ts = j.at("window").at("end").get<double>();
    f.subject = j.at("subject").get<std::string>();
    auto kind = finding_kind_from_string(j.at("kind").get<std::string>());
    if (!kind)
        throw Error("unknown finding kind: " + j.at("kind").get<std::string>());
    f.kind = *kind;
    f.value = j.at("value").get<double>();
    auto sev = severity_from_string(j.at("severity").get<std::string>());
    if (!sev)
        throw Error("unknown severity: " + j.at("severity").get<std::string>());
    f.severity = *sev;
    for (const auto& e : j.at("evidence")) {
        RecordRef r;
        r.ts = e.at("ts").get<double>();
        r.src_ip = e.at("src_ip").get<std::string>();
        r.detail = e.at("detail").get<std::string>();
        f.evidence.push_back(std::move(r));
    }
    if (j.contains("tag"))
        f.tag = tag_level_from_string(j.at("tag").get<std::string>());
    return f;
}

} // namespace secdoar
