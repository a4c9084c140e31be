#include "cglp/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cglp/error.hpp"

namespace cglp {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Line of every object key, addressed by JSON pointer.
class KeyLines {
public:
    KeyLines(const std::string& text, std::string origin) : origin_(std::move(origin)) {
        // Every string followed by ':' is a key; record them in document order.
        std::vector<int> key_lines;
        int line = 1;
        for (std::size_t i = 0; i < text.size(); ++i) {
            const char c = text[i];
            if (c == '\n') ++line;
            if (c != '"') continue;
            const int start_line = line;
            for (++i; i < text.size() && text[i] != '"'; ++i) {
                if (text[i] == '\\') ++i;
                else if (text[i] == '\n') ++line;
            }
            std::size_t j = i + 1;
            while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) {
                if (text[j] == '\n') ++line;
                ++j;
            }
            if (j < text.size() && text[j] == ':') key_lines.push_back(start_line);
            i = j - 1;
        }
        keys_ = std::move(key_lines);
    }

    // Parser callback that pairs each key event with the next recorded line.
    json parse(const std::string& text) {
        struct Frame {
            bool array;
            std::size_t index = 0;
            std::string key;
        };
        std::vector<Frame> frames;
        std::size_t next_key = 0;
        auto pointer = [&] {
            std::string p;
            for (const auto& f : frames) p += "/" + (f.array ? std::to_string(f.index) : f.key);
            return p;
        };
        auto bump = [&] {
            if (!frames.empty() && frames.back().array) ++frames.back().index;
        };
        json::parser_callback_t cb = [&](int, json::parse_event_t ev, json& parsed) {
            switch (ev) {
                case json::parse_event_t::object_start:
                    frames.push_back({false, 0, {}});
                    break;
                case json::parse_event_t::array_start:
                    frames.push_back({true, 0, {}});
                    break;
                case json::parse_event_t::key:
                    frames.back().key = parsed.get<std::string>();
                    if (next_key < keys_.size()) lines_[pointer()] = keys_[next_key];
                    ++next_key;
                    break;
                case json::parse_event_t::object_end:
                case json::parse_event_t::array_end:
                    frames.pop_back();
                    bump();
                    break;
                case json::parse_event_t::value:
                    bump();
                    break;
            }
            return true;
        };
        try {
            return json::parse(text, cb);
        } catch (const json::parse_error& e) {
            throw ValidationError(origin_ + ":" + std::to_string(line_of_byte(text, e.byte)) +
                                  ": malformed JSON: " + e.what());
        }
    }

    std::string where(const std::string& ptr) const {
        // Fall back to the nearest enclosing key that has a line.
        std::string p = ptr;
        while (!p.empty()) {
            auto it = lines_.find(p);
            if (it != lines_.end()) return origin_ + ":" + std::to_string(it->second);
            p.erase(p.rfind('/'));
        }
        return origin_;
    }

    [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
        throw ValidationError(where(ptr) + ": " + msg + (ptr.empty() ? "" : " (at " + ptr + ")"));
    }

private:
    static int line_of_byte(const std::string& text, std::size_t byte) {
        int line = 1;
        for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
            if (text[i] == '\n') ++line;
        }
        return line;
    }

    std::string origin_;
    std::vector<int> keys_;
    std::map<std::string, int> lines_;
};

// Typed, schema-checked view of one JSON object.
class Obj {
public:
    Obj(const json& j, std::string ptr, const KeyLines& lines, std::set<std::string> allowed)
        : j_(j), ptr_(std::move(ptr)), lines_(lines), allowed_(std::move(allowed)) {
        if (!j_.is_object()) lines_.fail(ptr_, "expected an object");
        for (const auto& [k, v] : j_.items()) {
            if (!allowed_.count(k)) {
                std::string list;
                for (const auto& a : allowed_) list += (list.empty() ? "" : ", ") + a;
                lines_.fail(ptr_ + "/" + k, "unknown key '" + k + "' (allowed: " + list + ")");
            }
        }
    }

    bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
    const json& at(const std::string& k) const { return j_.at(k); }
    std::string path(const std::string& k) const { return ptr_ + "/" + k; }
    const KeyLines& lines() const { return lines_; }

    double number(const std::string& k) const {
        const json& v = j_.at(k);
        if (!v.is_number()) lines_.fail(path(k), "'" + k + "' must be a number");
        return v.get<double>();
    }
    void number(const std::string& k, double& out) const {
        if (has(k)) out = number(k);
    }
    void number(const std::string& k, std::optional<double>& out) const {
        if (has(k)) out = number(k);
    }
    std::uint64_t unsigned_int(const std::string& k) const {
        const json& v = j_.at(k);
        if (!v.is_number_unsigned()) lines_.fail(path(k), "'" + k + "' must be a nonnegative integer");
        return v.get<std::uint64_t>();
    }
    std::string string(const std::string& k) const {
        const json& v = j_.at(k);
        if (!v.is_string()) lines_.fail(path(k), "'" + k + "' must be a string");
        return v.get<std::string>();
    }

private:
    const json& j_;
    std::string ptr_;
    const KeyLines& lines_;
    std::set<std::string> allowed_;
};

const std::set<std::string> kControllerKeys = {
    "label",      "preset",     "variant",    "kp",         "crossover_hz",   "omega_i_hz",
    "omega_d_hz", "omega_t_hz", "omega_f_hz", "omega_r_hz", "omega_alpha_hz", "gamma",
    "omega_x_hz", "notch"};

ControllerSpec preset_spec(const std::string& name) {
    if (name == "paper-CL") return ControllerSpec::paper_linear();
    if (name == "paper-CNL") return ControllerSpec::paper_cglp(150.0);
    throw ValidationError("unknown preset '" + name + "' (expected paper-CL or paper-CNL)");
}

std::string preset_label(const std::string& name) { return name == "paper-CL" ? "C_L" : "C_NL"; }

LabeledSpec parse_controller(const json& j, const std::string& ptr, const KeyLines& lines, std::size_t index) {
    Obj o(j, ptr, lines, kControllerKeys);
    LabeledSpec ls{"controller_" + std::to_string(index), ControllerSpec{}};
    ControllerSpec& s = ls.spec;
    if (o.has("preset")) {
        const std::string name = o.string("preset");
        try {
            s = preset_spec(name);
        } catch (const ValidationError& e) {
            lines.fail(o.path("preset"), e.what());
        }
        ls.label = preset_label(name);
    }
    if (o.has("label")) ls.label = o.string("label");
    if (o.has("variant")) {
        try {
            s.variant = variant_from_string(o.string("variant"));
        } catch (const ValidationError& e) {
            lines.fail(o.path("variant"), e.what());
        }
    }
    o.number("kp", s.kp);
    o.number("crossover_hz", s.crossover_hz);
    o.number("omega_i_hz", s.omega_i_hz);
    o.number("omega_d_hz", s.omega_d_hz);
    o.number("omega_t_hz", s.omega_t_hz);
    o.number("omega_f_hz", s.omega_f_hz);
    o.number("omega_r_hz", s.omega_r_hz);
    if (o.has("omega_alpha_hz")) {
        s.omega_alpha_hz = o.number("omega_alpha_hz");
    } else if (j.contains("omega_alpha_hz")) {
        s.omega_alpha_hz.reset();  // explicit null: derive from omega_r and gamma
    }
    o.number("gamma", s.gamma);
    o.number("omega_x_hz", s.omega_x_hz);
    if (o.has("notch")) {
        Obj n(o.at("notch"), o.path("notch"), lines, {"omega_n_hz", "q1", "q2"});
        n.number("omega_n_hz", s.notch.omega_n_hz);
        n.number("q1", s.notch.q1);
        n.number("q2", s.notch.q2);
    }
    try {
        s.validate();
    } catch (const ValidationError& e) {
        lines.fail(ptr, std::string("controller '") + ls.label + "': " + e.what());
    }
    return ls;
}

SignalDescriptor parse_signal(const json& j, const std::string& ptr, const KeyLines& lines) {
    Obj o(j, ptr, lines, {"kind", "amplitude", "frequency_hz", "phase_rad", "sigma", "terms"});
    if (!o.has("kind")) lines.fail(ptr, "signal needs a 'kind'");
    const std::string kind = o.string("kind");
    SignalDescriptor d;
    if (kind == "zero") {
        d.kind = SignalDescriptor::Kind::zero;
    } else if (kind == "sine") {
        d.kind = SignalDescriptor::Kind::sine;
        o.number("amplitude", d.amplitude);
        o.number("frequency_hz", d.frequency_hz);
        o.number("phase_rad", d.phase);
    } else if (kind == "gaussian_white") {
        d.kind = SignalDescriptor::Kind::gaussian_white;
        o.number("sigma", d.sigma);
    } else if (kind == "sum") {
        d.kind = SignalDescriptor::Kind::sum;
        if (!o.has("terms") || !o.at("terms").is_array()) lines.fail(ptr, "sum signal needs a 'terms' array");
        const json& terms = o.at("terms");
        for (std::size_t i = 0; i < terms.size(); ++i) {
            d.terms.push_back(parse_signal(terms[i], o.path("terms") + "/" + std::to_string(i), lines));
        }
    } else {
        lines.fail(o.path("kind"), "unknown signal kind '" + kind + "' (expected zero, sine, gaussian_white or sum)");
    }
    try {
        d.validate();
    } catch (const Error& e) {
        lines.fail(ptr, e.what());
    }
    return d;
}

std::vector<double> number_array(const json& j, const std::string& ptr, const KeyLines& lines) {
    if (!j.is_array()) lines.fail(ptr, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) lines.fail(ptr, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

RationalTF parse_plant(const json& j, const std::string& ptr, const KeyLines& lines) {
    if (j.is_string()) {
        if (j.get<std::string>() != "paper") lines.fail(ptr, "plant preset must be \"paper\"");
        return paper_plant();
    }
    Obj o(j, ptr, lines, {"numerator", "denominator", "delay_s"});
    if (!o.has("numerator") || !o.has("denominator")) {
        lines.fail(ptr, "plant needs 'numerator' and 'denominator' (ascending powers of s)");
    }
    double delay = 0.0;
    o.number("delay_s", delay);
    try {
        return RationalTF(number_array(o.at("numerator"), o.path("numerator"), lines),
                          number_array(o.at("denominator"), o.path("denominator"), lines), delay);
    } catch (const InvalidParameter& e) {
        lines.fail(ptr, std::string("invalid plant: ") + e.what());
    }
}

void parse_scenario(const json& j, const std::string& ptr, const KeyLines& lines, ExperimentConfig& cfg) {
    Obj o(j, ptr, lines,
          {"sample_rate_hz", "duration_s", "analysis_fraction", "reference", "disturbance", "noise_sigma",
           "snr_db", "seed"});
    o.number("sample_rate_hz", cfg.scenario.sample_rate);
    o.number("duration_s", cfg.scenario.duration);
    o.number("analysis_fraction", cfg.scenario.analysis_fraction);
    if (o.has("reference")) cfg.scenario.reference = parse_signal(o.at("reference"), o.path("reference"), lines);
    if (o.has("disturbance")) {
        cfg.scenario.disturbance = parse_signal(o.at("disturbance"), o.path("disturbance"), lines);
    }
    if (o.has("noise_sigma") && o.has("snr_db")) lines.fail(ptr, "give either noise_sigma or snr_db, not both");
    o.number("noise_sigma", cfg.noise_sigma);
    o.number("snr_db", cfg.snr_db);
    if (cfg.noise_sigma && !(*cfg.noise_sigma >= 0.0)) lines.fail(o.path("noise_sigma"), "noise_sigma must be >= 0");
    if (o.has("seed")) cfg.seed = o.unsigned_int("seed");
    try {
        cfg.scenario.validate();
    } catch (const ValidationError& e) {
        lines.fail(ptr, e.what());
    }
}

void parse_analysis(const json& j, const std::string& ptr, const KeyLines& lines, ExperimentConfig& cfg) {
    Obj o(j, ptr, lines, {"grid", "harmonics", "sweep"});
    if (o.has("grid")) {
        Obj g(o.at("grid"), o.path("grid"), lines, {"f_min_hz", "f_max_hz", "points"});
        g.number("f_min_hz", cfg.grid.f_min_hz);
        g.number("f_max_hz", cfg.grid.f_max_hz);
        if (g.has("points")) cfg.grid.points = g.unsigned_int("points");
        if (!(cfg.grid.f_min_hz > 0.0 && cfg.grid.f_max_hz > cfg.grid.f_min_hz && cfg.grid.points >= 2)) {
            lines.fail(o.path("grid"), "grid needs 0 < f_min_hz < f_max_hz and at least 2 points");
        }
    }
    if (o.has("harmonics")) {
        const json& h = o.at("harmonics");
        if (!h.is_array() || h.empty()) lines.fail(o.path("harmonics"), "harmonics must be a nonempty array");
        cfg.harmonics.clear();
        for (const auto& v : h) {
            if (!v.is_number_integer() || v.get<int>() < 1) {
                lines.fail(o.path("harmonics"), "harmonic orders must be positive integers");
            }
            cfg.harmonics.push_back(v.get<int>());
        }
    }
    if (o.has("sweep")) {
        Obj s(o.at("sweep"), o.path("sweep"), lines, {"snr_db", "grid_points", "seeds", "threads"});
        if (s.has("snr_db")) cfg.sweep.snr_db = number_array(s.at("snr_db"), s.path("snr_db"), lines);
        if (s.has("grid_points")) cfg.sweep.grid_points = s.unsigned_int("grid_points");
        if (s.has("seeds")) cfg.sweep.seeds = s.unsigned_int("seeds");
        if (s.has("threads")) cfg.sweep.threads = static_cast<unsigned>(s.unsigned_int("threads"));
        if (cfg.sweep.grid_points < 5) lines.fail(s.path("grid_points"), "sweep grid_points must be >= 5");
        if (cfg.sweep.seeds < 1) lines.fail(s.path("seeds"), "sweep seeds must be >= 1");
    }
}

ojson signal_json(const SignalDescriptor& d) {
    switch (d.kind) {
        case SignalDescriptor::Kind::zero:
            return {{"kind", "zero"}};
        case SignalDescriptor::Kind::sine:
            return {{"kind", "sine"}, {"amplitude", d.amplitude}, {"frequency_hz", d.frequency_hz},
                    {"phase_rad", d.phase}};
        case SignalDescriptor::Kind::gaussian_white:
            return {{"kind", "gaussian_white"}, {"sigma", d.sigma}};
        case SignalDescriptor::Kind::sum: {
            ojson terms = ojson::array();
            for (const auto& t : d.terms) terms.push_back(signal_json(t));
            return {{"kind", "sum"}, {"terms", terms}};
        }
    }
    return {};
}

template <class T>
ojson opt(const std::optional<T>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

}  // namespace

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg;
    cfg.preset = name;
    cfg.controllers = {{preset_label(name), preset_spec(name)}};
    return cfg;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    KeyLines lines(text, origin);
    const json root = lines.parse(text);
    Obj o(root, "", lines,
          {"metadata", "preset", "plant", "controllers", "scenario", "analysis", "output_dir"});

    ExperimentConfig cfg;
    if (o.has("preset")) {
        try {
            cfg = preset_config(o.string("preset"));
        } catch (const ValidationError& e) {
            lines.fail("/preset", e.what());
        }
    }
    if (o.has("plant")) cfg.plant = parse_plant(o.at("plant"), "/plant", lines);
    if (o.has("controllers")) {
        const json& arr = o.at("controllers");
        if (!arr.is_array() || arr.empty()) lines.fail("/controllers", "controllers must be a nonempty array");
        cfg.controllers.clear();
        std::set<std::string> labels;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string ptr = "/controllers/" + std::to_string(i);
            cfg.controllers.push_back(parse_controller(arr[i], ptr, lines, i));
            if (!labels.insert(cfg.controllers.back().label).second) {
                lines.fail(ptr, "duplicate controller label '" + cfg.controllers.back().label + "'");
            }
        }
    }
    if (cfg.controllers.empty()) lines.fail("", "no controllers: set 'preset' or 'controllers'");
    if (o.has("scenario")) parse_scenario(o.at("scenario"), "/scenario", lines, cfg);
    if (o.has("analysis")) parse_analysis(o.at("analysis"), "/analysis", lines, cfg);
    if (o.has("output_dir")) cfg.output_dir = o.string("output_dir");
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
    ojson j;
    if (cfg.preset) j["preset"] = *cfg.preset;
    j["plant"] = {{"numerator", cfg.plant.numerator()},
                  {"denominator", cfg.plant.denominator()},
                  {"delay_s", cfg.plant.delay()}};
    ojson ctrls = ojson::array();
    for (const auto& [label, s] : cfg.controllers) {
        ojson c;
        c["label"] = label;
        c["variant"] = to_string(s.variant);
        c["kp"] = opt(s.kp);
        c["crossover_hz"] = s.crossover_hz;
        c["omega_i_hz"] = s.omega_i_hz;
        c["omega_d_hz"] = s.omega_d_hz;
        c["omega_t_hz"] = s.omega_t_hz;
        c["omega_f_hz"] = s.omega_f_hz;
        c["omega_r_hz"] = s.omega_r_hz;
        c["omega_alpha_hz"] = opt(s.omega_alpha_hz);
        c["gamma"] = s.gamma;
        c["omega_x_hz"] = s.omega_x_hz;
        c["notch"] = {{"omega_n_hz", s.notch.omega_n_hz}, {"q1", s.notch.q1}, {"q2", s.notch.q2}};
        ctrls.push_back(c);
    }
    j["controllers"] = ctrls;
    ojson sc;
    sc["sample_rate_hz"] = cfg.scenario.sample_rate;
    sc["duration_s"] = cfg.scenario.duration;
    sc["analysis_fraction"] = cfg.scenario.analysis_fraction;
    sc["reference"] = signal_json(cfg.scenario.reference);
    sc["disturbance"] = signal_json(cfg.scenario.disturbance);
    if (cfg.noise_sigma) sc["noise_sigma"] = *cfg.noise_sigma;
    if (cfg.snr_db) sc["snr_db"] = *cfg.snr_db;
    sc["seed"] = cfg.seed;
    j["scenario"] = sc;
    j["analysis"] = {{"grid", {{"f_min_hz", cfg.grid.f_min_hz}, {"f_max_hz", cfg.grid.f_max_hz},
                               {"points", cfg.grid.points}}},
                     {"harmonics", cfg.harmonics},
                     {"sweep", {{"snr_db", cfg.sweep.snr_db},
                                {"grid_points", cfg.sweep.grid_points},
                                {"seeds", cfg.sweep.seeds},
                                {"threads", cfg.sweep.threads}}}};
    j["output_dir"] = cfg.output_dir;
    return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
    ojson j = to_json(cfg);
    j.erase("output_dir");  // where results go does not change them
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ControllerSpec snr_reference_spec(const ExperimentConfig& cfg) {
    for (const auto& c : cfg.controllers) {
        if (c.spec.variant == ControllerVariant::linear) continue;
        ControllerSpec s = c.spec;
        s.variant = ControllerVariant::cglp;
        s.omega_x_hz = s.omega_r_hz;
        return s;
    }
    return cfg.controllers.front().spec;
}

double resolve_noise_sigma(const ExperimentConfig& cfg) {
    if (cfg.noise_sigma) return *cfg.noise_sigma;
    if (!cfg.snr_db) return 0.0;
    return sigma_for_snr(build_loop(snr_reference_spec(cfg), cfg.plant), *cfg.snr_db, cfg.scenario);
}

}  // namespace cglp
