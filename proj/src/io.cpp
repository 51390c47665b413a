#include "qwalk/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qwalk {

std::string fmt_g12(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double round12(double v) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    const double mag = std::pow(10.0, 11.0 - std::floor(std::log10(std::abs(v))));
    return std::round(v * mag) / mag;
}

json complex_to_json(const Cx& z) { return json::array({round12(z.real()), round12(z.imag())}); }

Cx complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json coeffs_to_json(const Eigen::VectorXcd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v[i]));
    return out;
}

Eigen::VectorXcd coeffs_from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("coefficients must be an array of [re, im]");
    Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = complex_from_json(j[i]);
    return v;
}

json scheme_to_json(const EncodingScheme& s) {
    json out;
    out["n"] = s.n();
    if (const auto& g = s.generator(); g.has_value()) {
        out["delta_theta_deg"] = g->first;
        out["delta_phi_deg"] = g->second;
        out["rows"] = s.rows();
    } else {
        json rows = json::array();
        for (int j = 0; j < s.rows(); ++j) {
            json row = json::array();
            for (const auto& pt : s.row(j)) row.push_back(json::array({pt.theta_deg, pt.phi_deg}));
            rows.push_back(row);
        }
        out["rows"] = rows;
    }
    return out;
}

EncodingScheme scheme_from_json(const json& j, bool validate) {
    const int n = j.at("n").get<int>();
    if (j.contains("delta_theta_deg")) {
        const int rows = j.contains("rows") && j["rows"].is_number() ? j["rows"].get<int>() : -1;
        return EncodingScheme::generated(n, j.at("delta_theta_deg").get<double>(),
                                         j.at("delta_phi_deg").get<double>(), rows, validate);
    }
    std::vector<std::vector<BlochPoint>> rows;
    for (const auto& row : j.at("rows")) {
        std::vector<BlochPoint> r;
        for (const auto& pt : row)
            r.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
        rows.push_back(std::move(r));
    }
    return EncodingScheme(n, std::move(rows), validate);
}

json measurements_to_json(const MeasurementSet& m) {
    json runs = json::array();
    for (const auto& rec : m.runs) {
        json r;
        r["delta_theta_deg"] = rec.delta_theta_deg;
        r["path"] = rec.path;
        r["R"] = complex_to_json(rec.ratio);
        if (rec.c1_zero) r["c1_zero"] = true;
        if (rec.count_ratio) r["count_ratio"] = round12(*rec.count_ratio);
        runs.push_back(r);
    }
    json out;
    out["runs"] = runs;
    out["weight"] = {{"theta_star_deg", m.theta_star_deg}, {"r", round12(m.r)}};
    if (m.noise_scale > 0.0) out["noise_scale"] = m.noise_scale;
    return out;
}

MeasurementSet measurements_from_json(const json& j) {
    MeasurementSet m;
    for (const auto& r : j.at("runs")) {
        RunRecord rec;
        rec.delta_theta_deg = r.at("delta_theta_deg").get<double>();
        rec.path = r.at("path").get<int>();
        rec.ratio = complex_from_json(r.at("R"));
        rec.c1_zero = r.value("c1_zero", false);
        if (r.contains("count_ratio")) rec.count_ratio = r["count_ratio"].get<double>();
        m.runs.push_back(rec);
    }
    m.theta_star_deg = j.at("weight").at("theta_star_deg").get<double>();
    m.r = j.at("weight").at("r").get<double>();
    m.noise_scale = j.value("noise_scale", 0.0);
    return m;
}

json report_to_json(const ReconstructionReport& rep) {
    json out;
    out["window"] = rep.window;
    out["a_unit"] = coeffs_to_json(rep.a_unit);
    out["b_unit"] = coeffs_to_json(rep.b_unit);
    out["c_a"] = round12(rep.c_a);
    out["c_b"] = round12(rep.c_b);
    out["a"] = coeffs_to_json(rep.a);
    out["b"] = coeffs_to_json(rep.b);
    json dist = json::array();
    for (const auto& [x, p] : rep.distribution) dist.push_back(json::array({x, round12(p)}));
    out["distribution"] = dist;
    out["spread_speed"] = round12(rep.spread_speed_value);
    out["entropy"] = round12(rep.entropy_value);
    out["theta_star_deg"] = rep.theta_star_deg;
    out["count_ratio_at_theta_star"] = round12(rep.count_ratio_at_theta_star);
    out["conditioning"] = {{"null_dim_a", rep.null_dim_a},
                           {"null_dim_b", rep.null_dim_b},
                           {"sigma_next_a", round12(rep.sigma_next_a)},
                           {"sigma_max_a", round12(rep.sigma_max_a)},
                           {"sigma_next_b", round12(rep.sigma_next_b)},
                           {"sigma_max_b", round12(rep.sigma_max_b)},
                           {"refined", rep.refined}};
    if (rep.has_truth) {
        out["vs_truth"] = {{"fidelity_a", round12(rep.fidelity_a)},
                           {"fidelity_b", round12(rep.fidelity_b)},
                           {"total_variation", round12(rep.tv_distance)},
                           {"entropy_error", round12(rep.entropy_error)},
                           {"spread_error", round12(rep.spread_error)}};
    }
    return out;
}

namespace {

std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number: '" + s + "'");
    return v;
}

}  // namespace

Cx parse_complex_amp(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw std::invalid_argument("empty amplitude");
    if (s.back() != 'j') return {parse_double(s), 0.0};
    s.pop_back();
    // locate the sign separating re and im (skip exponent signs and pos 0)
    std::size_t split = std::string::npos;
    for (std::size_t i = s.size(); i-- > 1;) {
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    auto imag_of = [](const std::string& t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        return parse_double(t);
    };
    if (split == std::string::npos) return {0.0, imag_of(s)};
    return {parse_double(s.substr(0, split)), imag_of(s.substr(split))};
}

ParsedState parse_initial_state(const std::string& spec) {
    WalkState state;
    std::stringstream ss(spec);
    std::string term;
    bool any = false;
    while (std::getline(ss, term, ',')) {
        term = strip(term);
        if (term.empty()) continue;
        const std::size_t c2 = term.rfind(':');
        if (c2 == std::string::npos) throw std::invalid_argument("bad term '" + term + "'");
        const std::size_t c1 = term.rfind(':', c2 - 1);
        if (c1 == std::string::npos) throw std::invalid_argument("bad term '" + term + "'");
        const std::string amp_s = strip(term.substr(0, c1));
        const std::string pos_s = strip(term.substr(c1 + 1, c2 - c1 - 1));
        const std::string coin_s = strip(term.substr(c2 + 1));
        const Cx amp = parse_complex_amp(amp_s);
        const int pos = std::stoi(pos_s);
        if (coin_s == "c0")
            state.amps[pos].a += amp;
        else if (coin_s == "c1")
            state.amps[pos].b += amp;
        else
            throw std::invalid_argument("coin branch must be c0 or c1, got '" + coin_s + "'");
        any = true;
    }
    if (!any) throw std::invalid_argument("empty initial state");
    ParsedState out;
    out.raw_norm = std::sqrt(state.norm2());
    if (out.raw_norm <= 0.0) throw std::invalid_argument("zero-norm initial state");
    for (auto& [x, amp] : state.amps) {
        amp.a /= out.raw_norm;
        amp.b /= out.raw_norm;
    }
    out.state = std::move(state);
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace qwalk
