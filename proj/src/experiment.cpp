#include "sapinn/experiment.hpp"

#include "sapinn/csv.hpp"
#include "sapinn/errors.hpp"
#include "sapinn/metrics.hpp"

#include <Eigen/Dense>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sapinn::experiment {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string kind_name(Kind kind) {
    switch (kind) {
        case Kind::ToySdof: return "toy_sdof";
        case Kind::ThunderstormSdof: return "thunderstorm_sdof";
        case Kind::SyntheticQuake3DofLow: return "synthetic_quake_3dof_low";
        case Kind::SyntheticQuake3DofHigh: return "synthetic_quake_3dof_high";
        case Kind::Elcentro3Dof: return "elcentro_3dof";
        case Kind::Custom: return "custom";
    }
    throw ConfigError("kind_name: bad kind");
}

Kind kind_from_name(const std::string& name) {
    for (Kind k : {Kind::ToySdof, Kind::ThunderstormSdof, Kind::SyntheticQuake3DofLow,
                   Kind::SyntheticQuake3DofHigh, Kind::Elcentro3Dof, Kind::Custom})
        if (kind_name(k) == name) return k;
    throw ConfigError("unknown experiment kind: " + name);
}

namespace {

constexpr double kStandardGravity = 9.80665;

// Seed-stream indices hanging off the master seed.
constexpr std::uint64_t kStreamTruthPhases = 1;
constexpr std::uint64_t kStreamNoise = 2;
constexpr std::uint64_t kStreamEnsemble = 3;
constexpr std::uint64_t kStreamTrainInit = 4;

ModelConfig sdof_model() {
    ModelConfig m;
    m.masses = (Eigen::VectorXd(1) << 4500.0).finished();
    m.damping = (Eigen::VectorXd(1) << 0.245).finished();
    m.stiffness = (Eigen::VectorXd(1) << 27000.0).finished();
    m.input = dynamics::InputMap::nodal_force(0);
    return m;
}

ModelConfig chain3_model(double stiffness, double damping) {
    ModelConfig m;
    m.masses = Eigen::VectorXd::Constant(3, 50.0);
    m.damping = Eigen::VectorXd::Constant(3, damping);
    m.stiffness = Eigen::VectorXd::Constant(3, stiffness);
    m.input = dynamics::InputMap::base_excitation();
    m.bouc_wen = dynamics::BoucWen{1.0, 0.5, 1.0, 0};
    return m;
}

void apply_quake_defaults(ExperimentConfig& c, double stiffness) {
    c.duration = 80.0;
    c.truth = chain3_model(stiffness, 0.25);
    c.assumed = chain3_model(stiffness, 1.0); // misspecified damping
    c.theta = {{dynamics::ScalingAssignment::Target::Stiffness, 1, 0},
               {dynamics::ScalingAssignment::Target::Stiffness, 2, 1}};
    c.theta_names = {"theta1", "theta2"};
    c.excitation.family = ExcitationConfig::Family::KanaiTajimi;
    c.excitation.s1 = 0.1;
    c.excitation.omega_g = excitation::hz_to_rad(3.5);
    c.excitation.zeta_g = 0.24;
    c.excitation.freq_min_hz = 0.0;
    c.excitation.freq_max_hz = 10.0;
    c.excitation.delta_freq_hz = c.profile == Profile::Paper ? 0.015 : 0.05;
    c.network.hidden = {64, 64, 32, 64, 64};
}

} // namespace

ExperimentConfig default_config(Kind kind, Profile profile) {
    ExperimentConfig c;
    c.kind = kind;
    c.profile = profile;
    c.q_members = profile == Profile::Paper ? 20 : 5;
    switch (kind) {
        case Kind::ToySdof:
        case Kind::Custom: {
            c.duration = 50.0;
            c.truth = sdof_model();
            c.assumed = sdof_model();
            c.theta = {{dynamics::ScalingAssignment::Target::Stiffness, 0, 0}};
            c.theta_names = {"theta1"};
            c.excitation.family = ExcitationConfig::Family::Sinusoid;
            c.network.hidden = {20, 20};
            c.network.omega0 = 30.0;
            c.training.iterations = profile == Profile::Paper ? 50000 : 20000;
            break;
        }
        case Kind::ThunderstormSdof: {
            c.duration = profile == Profile::Paper ? 300.0 : 40.0;
            c.truth = sdof_model();
            c.assumed = sdof_model();
            c.assumed.masses[0] *= 1.05; // 5% mass misspecification
            c.theta = {{dynamics::ScalingAssignment::Target::Stiffness, 0, 0},
                       {dynamics::ScalingAssignment::Target::Damping, 0, 1}};
            c.theta_names = {"theta1", "theta2"};
            c.excitation.family = ExcitationConfig::Family::ThunderstormWind;
            c.excitation.n_omega = profile == Profile::Paper ? 128 : 64;
            c.excitation.freq_max_hz = 1.0;
            c.excitation.freq_min_hz = 0.0;
            c.network.hidden = {128, 64, 64, 64, 128};
            c.network.omega0 = 60.0;
            c.training.iterations = profile == Profile::Paper ? 50000 : 8000;
            break;
        }
        case Kind::SyntheticQuake3DofLow: {
            apply_quake_defaults(c, 30.0);
            c.network.omega0 = 60.0;
            c.training.iterations = profile == Profile::Paper ? 50000 : 15000;
            break;
        }
        case Kind::SyntheticQuake3DofHigh: {
            apply_quake_defaults(c, 3000.0);
            c.network.omega0 = 900.0;
            c.training.iterations = profile == Profile::Paper ? 50000 : 6000;
            break;
        }
        case Kind::Elcentro3Dof: {
            apply_quake_defaults(c, 3000.0);
            c.network.omega0 = 900.0;
            c.training.iterations = profile == Profile::Paper ? 50000 : 6000;
            c.excitation.family = ExcitationConfig::Family::Recorded;
            // Assumed (misspecified) spectrum for the estimation family.
            c.excitation.omega_g = excitation::hz_to_rad(1.59);
            c.excitation.zeta_g = 0.6;
            c.excitation.freq_max_hz = 24.0;
            c.excitation.delta_freq_hz = c.profile == Profile::Paper ? 0.015 : 0.06;
            break;
        }
    }
    return c;
}

namespace {

void check_keys(const ordered_json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) ok = true;
        if (!ok) throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
    }
}

Eigen::VectorXd parse_vector(const ordered_json& arr, const std::string& where) {
    if (!arr.is_array()) throw ConfigError("config: " + where + " must be an array");
    Eigen::VectorXd v(arr.size());
    Eigen::Index i = 0;
    for (const auto& x : arr) v[i++] = x.get<double>();
    return v;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

void parse_model(const ordered_json& obj, ModelConfig& model, const std::string& where) {
    check_keys(obj, where,
               {"masses_kg", "damping_ns_per_m", "stiffness_n_per_m", "input", "bouc_wen"});
    if (obj.contains("masses_kg")) model.masses = parse_vector(obj["masses_kg"], where);
    if (obj.contains("damping_ns_per_m"))
        model.damping = parse_vector(obj["damping_ns_per_m"], where);
    if (obj.contains("stiffness_n_per_m"))
        model.stiffness = parse_vector(obj["stiffness_n_per_m"], where);
    if (obj.contains("input")) {
        const auto& in = obj["input"];
        check_keys(in, where + ".input", {"type", "dof"});
        const std::string type = in.at("type").get<std::string>();
        if (type == "nodal_force")
            model.input = dynamics::InputMap::nodal_force(in.value("dof", 0));
        else if (type == "base_excitation")
            model.input = dynamics::InputMap::base_excitation();
        else
            throw ConfigError("config: unknown input type " + type);
    }
    if (obj.contains("bouc_wen")) {
        if (obj["bouc_wen"].is_null()) {
            model.bouc_wen.reset();
        } else {
            const auto& bw = obj["bouc_wen"];
            check_keys(bw, where + ".bouc_wen", {"alpha_r", "beta", "n", "location"});
            dynamics::BoucWen b;
            b.alpha_r = bw.value("alpha_r", 1.0);
            b.beta = bw.value("beta", 0.5);
            b.n_exp = bw.value("n", 1.0);
            b.location = bw.value("location", 0);
            model.bouc_wen = b;
        }
    }
}

ordered_json model_to_json(const ModelConfig& model) {
    ordered_json obj;
    obj["masses_kg"] = vector_to_json(model.masses);
    obj["damping_ns_per_m"] = vector_to_json(model.damping);
    obj["stiffness_n_per_m"] = vector_to_json(model.stiffness);
    ordered_json in;
    in["type"] = model.input.kind == dynamics::InputMap::Kind::NodalForce ? "nodal_force"
                                                                          : "base_excitation";
    in["dof"] = model.input.dof;
    obj["input"] = in;
    if (model.bouc_wen) {
        ordered_json bw;
        bw["alpha_r"] = model.bouc_wen->alpha_r;
        bw["beta"] = model.bouc_wen->beta;
        bw["n"] = model.bouc_wen->n_exp;
        bw["location"] = model.bouc_wen->location;
        obj["bouc_wen"] = bw;
    }
    return obj;
}

std::string family_name(ExcitationConfig::Family family) {
    switch (family) {
        case ExcitationConfig::Family::Sinusoid: return "sinusoid";
        case ExcitationConfig::Family::ThunderstormWind: return "thunderstorm_wind";
        case ExcitationConfig::Family::KanaiTajimi: return "kanai_tajimi";
        case ExcitationConfig::Family::Recorded: return "recorded";
    }
    throw ConfigError("bad excitation family");
}

ExcitationConfig::Family family_from_name(const std::string& name) {
    for (auto f : {ExcitationConfig::Family::Sinusoid, ExcitationConfig::Family::ThunderstormWind,
                   ExcitationConfig::Family::KanaiTajimi, ExcitationConfig::Family::Recorded})
        if (family_name(f) == name) return f;
    throw ConfigError("config: unknown excitation family " + name);
}

void parse_excitation(const ordered_json& obj, ExcitationConfig& e) {
    check_keys(obj, "excitation",
               {"family", "omega_rad_s", "amplitude_n", "phase_rad", "wind", "gamma_star",
                "t_gamma_s", "s1", "omega_g_hz", "zeta_g", "envelope", "grid", "record"});
    if (obj.contains("family")) e.family = family_from_name(obj["family"].get<std::string>());
    e.omega = obj.value("omega_rad_s", e.omega);
    e.amplitude = obj.value("amplitude_n", e.amplitude);
    e.phase = obj.value("phase_rad", e.phase);
    if (obj.contains("wind")) {
        const auto& w = obj["wind"];
        check_keys(w, "excitation.wind",
                   {"rho_kg_m3", "a_eff_m2", "c_d", "v_bar_m_s", "i_v", "turbulence_scale_s"});
        e.wind.rho = w.value("rho_kg_m3", e.wind.rho);
        e.wind.a_eff = w.value("a_eff_m2", e.wind.a_eff);
        e.wind.c_d = w.value("c_d", e.wind.c_d);
        e.wind.v_bar = w.value("v_bar_m_s", e.wind.v_bar);
        e.wind.i_v = w.value("i_v", e.wind.i_v);
        e.wind.turbulence_scale = w.value("turbulence_scale_s", e.wind.turbulence_scale);
    }
    e.gamma_star = obj.value("gamma_star", e.gamma_star);
    e.t_gamma = obj.value("t_gamma_s", e.t_gamma);
    e.s1 = obj.value("s1", e.s1);
    if (obj.contains("omega_g_hz")) e.omega_g = excitation::hz_to_rad(obj["omega_g_hz"].get<double>());
    e.zeta_g = obj.value("zeta_g", e.zeta_g);
    if (obj.contains("envelope")) {
        const auto& env = obj["envelope"];
        check_keys(env, "excitation.envelope", {"g_k", "a_per_s", "b_per_s", "power"});
        e.envelope_gk = env.value("g_k", e.envelope_gk);
        e.envelope_a = env.value("a_per_s", e.envelope_a);
        e.envelope_b = env.value("b_per_s", e.envelope_b);
        e.envelope_power = env.value("power", e.envelope_power);
    }
    if (obj.contains("grid")) {
        const auto& g = obj["grid"];
        check_keys(g, "excitation.grid",
                   {"freq_min_hz", "freq_max_hz", "delta_freq_hz", "n_omega"});
        e.freq_min_hz = g.value("freq_min_hz", e.freq_min_hz);
        e.freq_max_hz = g.value("freq_max_hz", e.freq_max_hz);
        e.delta_freq_hz = g.value("delta_freq_hz", e.delta_freq_hz);
        e.n_omega = g.value("n_omega", e.n_omega);
    }
    if (obj.contains("record")) {
        const auto& r = obj["record"];
        check_keys(r, "excitation.record", {"path", "format", "units", "scale"});
        e.record_path = r.value("path", e.record_path);
        e.record_format = r.value("format", e.record_format);
        e.record_units = r.value("units", e.record_units);
        e.record_scale = r.value("scale", e.record_scale);
    }
}

ordered_json excitation_to_json(const ExcitationConfig& e) {
    ordered_json obj;
    obj["family"] = family_name(e.family);
    obj["omega_rad_s"] = e.omega;
    obj["amplitude_n"] = e.amplitude;
    obj["phase_rad"] = e.phase;
    ordered_json w;
    w["rho_kg_m3"] = e.wind.rho;
    w["a_eff_m2"] = e.wind.a_eff;
    w["c_d"] = e.wind.c_d;
    w["v_bar_m_s"] = e.wind.v_bar;
    w["i_v"] = e.wind.i_v;
    w["turbulence_scale_s"] = e.wind.turbulence_scale;
    obj["wind"] = w;
    obj["gamma_star"] = e.gamma_star;
    obj["t_gamma_s"] = e.t_gamma;
    obj["s1"] = e.s1;
    obj["omega_g_hz"] = excitation::rad_to_hz(e.omega_g);
    obj["zeta_g"] = e.zeta_g;
    ordered_json env;
    env["g_k"] = e.envelope_gk;
    env["a_per_s"] = e.envelope_a;
    env["b_per_s"] = e.envelope_b;
    env["power"] = e.envelope_power;
    obj["envelope"] = env;
    ordered_json g;
    g["freq_min_hz"] = e.freq_min_hz;
    g["freq_max_hz"] = e.freq_max_hz;
    g["delta_freq_hz"] = e.delta_freq_hz;
    g["n_omega"] = e.n_omega;
    obj["grid"] = g;
    ordered_json r;
    r["path"] = e.record_path;
    r["format"] = e.record_format;
    r["units"] = e.record_units;
    r["scale"] = e.record_scale;
    obj["record"] = r;
    return obj;
}

void parse_theta(const ordered_json& arr, ExperimentConfig& c) {
    if (!arr.is_array()) throw ConfigError("config: theta must be an array");
    c.theta.clear();
    c.theta_names.clear();
    int index = 0;
    for (const auto& item : arr) {
        check_keys(item, "theta[]", {"target", "element", "name"});
        dynamics::ScalingAssignment s;
        const std::string target = item.at("target").get<std::string>();
        if (target == "stiffness")
            s.target = dynamics::ScalingAssignment::Target::Stiffness;
        else if (target == "damping")
            s.target = dynamics::ScalingAssignment::Target::Damping;
        else
            throw ConfigError("config: theta target must be stiffness or damping");
        s.element = item.at("element").get<int>();
        s.theta_index = index;
        c.theta.push_back(s);
        c.theta_names.push_back(item.value("name", "theta" + std::to_string(index + 1)));
        ++index;
    }
}

} // namespace

ExperimentConfig load_config(const std::string& path,
                             const std::optional<std::string>& profile_override,
                             const std::optional<std::uint64_t>& seed_override,
                             const std::optional<std::string>& out_override,
                             const std::optional<std::string>& mode_override) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    check_keys(doc, "top level",
               {"kind", "profile", "seed", "output_dir", "mode", "observation", "truth_model",
                "assumed_model", "theta", "excitation", "network", "training", "ensemble"});

    const Kind kind = kind_from_name(doc.value("kind", std::string("toy_sdof")));
    std::string profile_name = doc.value("profile", std::string("desk"));
    if (profile_override) profile_name = *profile_override;
    Profile profile;
    if (profile_name == "paper")
        profile = Profile::Paper;
    else if (profile_name == "desk")
        profile = Profile::Desk;
    else
        throw ConfigError("config: profile must be paper or desk");

    ExperimentConfig c = default_config(kind, profile);
    c.seed = doc.value("seed", c.seed);
    c.output_dir = doc.value("output_dir", c.output_dir);
    if (doc.contains("mode")) c.mode = estimators::mode_from_name(doc["mode"].get<std::string>());
    if (doc.contains("observation")) {
        const auto& obs = doc["observation"];
        check_keys(obs, "observation", {"duration_s", "dt_s", "noise_ratio"});
        c.duration = obs.value("duration_s", c.duration);
        c.dt = obs.value("dt_s", c.dt);
        c.noise_ratio = obs.value("noise_ratio", c.noise_ratio);
    }
    if (doc.contains("truth_model")) parse_model(doc["truth_model"], c.truth, "truth_model");
    if (doc.contains("assumed_model")) {
        // Assumed model starts from the truth overrides, then applies its own.
        if (doc.contains("truth_model")) parse_model(doc["truth_model"], c.assumed, "truth_model");
        parse_model(doc["assumed_model"], c.assumed, "assumed_model");
    } else if (doc.contains("truth_model") && c.kind == Kind::ToySdof) {
        parse_model(doc["truth_model"], c.assumed, "truth_model");
    }
    if (doc.contains("theta")) parse_theta(doc["theta"], c);
    if (doc.contains("excitation")) parse_excitation(doc["excitation"], c.excitation);
    if (doc.contains("network")) {
        const auto& net = doc["network"];
        check_keys(net, "network", {"hidden", "omega0", "output_scales", "force_scale"});
        if (net.contains("hidden")) {
            c.network.hidden.clear();
            for (const auto& h : net["hidden"]) c.network.hidden.push_back(h.get<int>());
        }
        c.network.omega0 = net.value("omega0", c.network.omega0);
        if (net.contains("output_scales")) {
            c.network.output_scales.clear();
            for (const auto& s : net["output_scales"])
                c.network.output_scales.push_back(s.get<double>());
        }
        c.network.force_scale = net.value("force_scale", c.network.force_scale);
    }
    if (doc.contains("training")) {
        const auto& tr = doc["training"];
        check_keys(tr, "training",
                   {"iterations", "learning_rate", "log_every", "lambda_sp", "lambda_d",
                    "lambda_bc", "normalize_by_channel_variance"});
        c.training.iterations = tr.value("iterations", c.training.iterations);
        c.training.learning_rate = tr.value("learning_rate", c.training.learning_rate);
        c.training.log_every = tr.value("log_every", c.training.log_every);
        c.training.weights.lambda_sp = tr.value("lambda_sp", c.training.weights.lambda_sp);
        c.training.weights.lambda_d = tr.value("lambda_d", c.training.weights.lambda_d);
        c.training.weights.lambda_bc = tr.value("lambda_bc", c.training.weights.lambda_bc);
        c.training.normalize_by_channel_variance =
            tr.value("normalize_by_channel_variance", c.training.normalize_by_channel_variance);
    }
    if (doc.contains("ensemble")) {
        const auto& en = doc["ensemble"];
        check_keys(en, "ensemble", {"q_members"});
        c.q_members = en.value("q_members", c.q_members);
    }
    if (seed_override) c.seed = *seed_override;
    if (out_override) c.output_dir = *out_override;
    if (mode_override) c.mode = estimators::mode_from_name(*mode_override);
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    ordered_json doc;
    doc["kind"] = kind_name(c.kind);
    doc["profile"] = c.profile == Profile::Paper ? "paper" : "desk";
    doc["seed"] = c.seed;
    doc["output_dir"] = c.output_dir;
    doc["mode"] = estimators::mode_name(c.mode);
    ordered_json obs;
    obs["duration_s"] = c.duration;
    obs["dt_s"] = c.dt;
    obs["noise_ratio"] = c.noise_ratio;
    doc["observation"] = obs;
    doc["truth_model"] = model_to_json(c.truth);
    doc["assumed_model"] = model_to_json(c.assumed);
    ordered_json theta = ordered_json::array();
    for (std::size_t i = 0; i < c.theta.size(); ++i) {
        ordered_json item;
        item["target"] = c.theta[i].target == dynamics::ScalingAssignment::Target::Stiffness
                             ? "stiffness"
                             : "damping";
        item["element"] = c.theta[i].element;
        item["name"] = c.theta_names[i];
        theta.push_back(item);
    }
    doc["theta"] = theta;
    doc["excitation"] = excitation_to_json(c.excitation);
    ordered_json net;
    net["hidden"] = c.network.hidden;
    net["omega0"] = c.network.omega0;
    if (!c.network.output_scales.empty()) net["output_scales"] = c.network.output_scales;
    net["force_scale"] = c.network.force_scale;
    doc["network"] = net;
    ordered_json tr;
    tr["iterations"] = c.training.iterations;
    tr["learning_rate"] = c.training.learning_rate;
    tr["log_every"] = c.training.log_every;
    tr["lambda_sp"] = c.training.weights.lambda_sp;
    tr["lambda_d"] = c.training.weights.lambda_d;
    tr["lambda_bc"] = c.training.weights.lambda_bc;
    tr["normalize_by_channel_variance"] = c.training.normalize_by_channel_variance;
    doc["training"] = tr;
    ordered_json en;
    en["q_members"] = c.q_members;
    doc["ensemble"] = en;
    return doc.dump(2) + "\n";
}

dynamics::StructuralModel build_model(const ModelConfig& model,
                                      const std::vector<dynamics::ScalingAssignment>& theta,
                                      const std::vector<std::string>& theta_names) {
    return dynamics::StructuralModel(model.masses, model.damping, model.stiffness, model.input,
                                     model.bouc_wen, theta, theta_names);
}

excitation::SpectrumModel build_spectrum(const ExcitationConfig& e) {
    if (e.family == ExcitationConfig::Family::Sinusoid) {
        excitation::FrequencyGrid grid((Eigen::VectorXd(1) << e.omega).finished(), 1.0);
        return excitation::SpectrumModel(grid, (Eigen::VectorXd(1) << 0.5).finished());
    }
    const double wmin = excitation::hz_to_rad(e.freq_min_hz);
    const double wmax = excitation::hz_to_rad(e.freq_max_hz);
    int n = e.n_omega;
    if (e.delta_freq_hz > 0.0) {
        const double dw = excitation::hz_to_rad(e.delta_freq_hz);
        n = static_cast<int>(std::floor((wmax - wmin) / dw + 1.5));
        excitation::FrequencyGrid grid = [&] {
            Eigen::VectorXd w(n);
            for (int i = 0; i < n; ++i) w[i] = wmin + dw * i;
            return excitation::FrequencyGrid(w, dw);
        }();
        if (e.family == ExcitationConfig::Family::ThunderstormWind)
            return excitation::turbulence_psd(grid, e.wind.turbulence_scale);
        return excitation::kanai_tajimi_psd(grid, e.s1, e.omega_g, e.zeta_g);
    }
    excitation::FrequencyGrid grid = excitation::FrequencyGrid::uniform(wmin, wmax, n);
    if (e.family == ExcitationConfig::Family::ThunderstormWind)
        return excitation::turbulence_psd(grid, e.wind.turbulence_scale);
    return excitation::kanai_tajimi_psd(grid, e.s1, e.omega_g, e.zeta_g);
}

std::shared_ptr<families::SpectralFamily> build_family(const ExperimentConfig& config,
                                                       const Eigen::VectorXd& times) {
    const auto& e = config.excitation;
    switch (e.family) {
        case ExcitationConfig::Family::Sinusoid:
            return std::make_shared<families::ModulatedSrmFamily>(
                excitation::Envelope::constant(1.0), build_spectrum(e), times, true);
        case ExcitationConfig::Family::ThunderstormWind:
            return std::make_shared<families::ThunderstormDragFamily>(
                e.wind, excitation::Envelope::thunderstorm(e.gamma_star, e.t_gamma, 1),
                build_spectrum(e), times);
        case ExcitationConfig::Family::KanaiTajimi:
        case ExcitationConfig::Family::Recorded:
            // The recorded kind estimates against the configured (possibly
            // misspecified) ground-motion spectrum.
            return std::make_shared<families::ModulatedSrmFamily>(
                excitation::Envelope::seismic_exp_diff(e.envelope_gk, e.envelope_a, e.envelope_b,
                                                       e.envelope_power),
                build_spectrum(e), times, false);
    }
    throw ConfigError("build_family: bad excitation family");
}

GroundMotionRecord ingest_ground_motion(const std::string& path, const std::string& format,
                                        double target_dt, const std::string& units,
                                        double scale) {
    if (scale == 0.0) throw ConfigError("ingest_ground_motion: zero scale would erase the record");
    if (!(target_dt > 0.0)) throw ConfigError("ingest_ground_motion: target_dt must be > 0");
    double unit_factor = 1.0;
    if (units == "g")
        unit_factor = kStandardGravity;
    else if (units != "m_per_s2")
        throw ConfigError("ingest_ground_motion: units must be g or m_per_s2");

    std::vector<double> times, accel;
    if (format == "two_column_csv") {
        const auto table = csv::read_table(path);
        if (table.header.size() != 2)
            throw IoError("ingest_ground_motion: expected two columns in " + path);
        for (Eigen::Index r = 0; r < table.data.rows(); ++r) {
            times.push_back(table.data(r, 0));
            accel.push_back(table.data(r, 1));
        }
    } else if (format == "peer") {
        std::ifstream in(path);
        if (!in) throw IoError("ingest_ground_motion: cannot open " + path);
        std::string line;
        double dt = 0.0;
        long npts = 0;
        std::size_t lineno = 0;
        bool in_data = false;
        while (std::getline(in, line)) {
            ++lineno;
            if (!in_data) {
                const auto npts_pos = line.find("NPTS");
                const auto dt_pos = line.find("DT");
                if (npts_pos != std::string::npos && dt_pos != std::string::npos) {
                    auto grab_number = [&](std::size_t from) {
                        std::size_t i = from;
                        while (i < line.size() && (line[i] < '0' || line[i] > '9') &&
                               line[i] != '.')
                            ++i;
                        std::size_t j = i;
                        while (j < line.size() &&
                               ((line[j] >= '0' && line[j] <= '9') || line[j] == '.' ||
                                line[j] == 'e' || line[j] == 'E' || line[j] == '-' ||
                                line[j] == '+'))
                            ++j;
                        return std::stod(line.substr(i, j - i));
                    };
                    npts = static_cast<long>(grab_number(npts_pos + 4));
                    dt = grab_number(dt_pos + 2);
                    in_data = true;
                }
                continue;
            }
            std::stringstream ss(line);
            double v;
            while (ss >> v) accel.push_back(v);
            if (ss.fail() && !ss.eof())
                throw IoError("ingest_ground_motion: malformed row at " + path + ":" +
                              std::to_string(lineno));
        }
        if (!in_data || dt <= 0.0)
            throw IoError("ingest_ground_motion: missing NPTS/DT header in " + path);
        if (npts > 0 && static_cast<long>(accel.size()) < npts)
            throw IoError("ingest_ground_motion: fewer samples than NPTS in " + path);
        if (npts > 0) accel.resize(static_cast<std::size_t>(npts));
        times.resize(accel.size());
        for (std::size_t k = 0; k < accel.size(); ++k) times[k] = dt * static_cast<double>(k);
    } else {
        throw ConfigError("ingest_ground_motion: format must be two_column_csv or peer");
    }
    if (times.size() < 2) throw IoError("ingest_ground_motion: record too short in " + path);
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1]))
            throw IoError("ingest_ground_motion: non-monotonic time at " + path + " row " +
                          std::to_string(k + 1));

    GroundMotionRecord record;
    record.source_label = path;
    record.scale = scale;
    record.original_dt = times[1] - times[0];

    // Linear resampling onto the uniform target grid.
    const double t_end = times.back();
    const auto n_out = static_cast<Eigen::Index>(std::floor(t_end / target_dt)) + 1;
    record.times.resize(n_out);
    record.accel.resize(n_out);
    std::size_t j = 0;
    for (Eigen::Index k = 0; k < n_out; ++k) {
        const double t = k * target_dt;
        while (j + 2 < times.size() && times[j + 1] < t) ++j;
        const double w = (t - times[j]) / (times[j + 1] - times[j]);
        const double v = (1.0 - w) * accel[j] + w * accel[j + 1];
        record.times[k] = t;
        record.accel[k] = v * unit_factor * scale;
    }
    return record;
}

namespace {

Eigen::VectorXd sample_times(double duration, double dt) {
    const auto n = static_cast<Eigen::Index>(std::llround(duration / dt)) + 1;
    Eigen::VectorXd t(n);
    for (Eigen::Index k = 0; k < n; ++k) t[k] = k * dt;
    return t;
}

} // namespace

SimulationArtifacts simulate(const ExperimentConfig& config) {
    SimulationArtifacts art;
    const auto truth = build_model(config.truth, config.theta, config.theta_names);
    double duration = config.duration;

    dynamics::ExcitationFn force_fn;
    switch (config.excitation.family) {
        case ExcitationConfig::Family::Sinusoid: {
            const double a = config.excitation.amplitude;
            const double w = config.excitation.omega;
            const double p = config.excitation.phase;
            force_fn = [a, w, p](double t) { return a * std::cos(w * t + p); };
            art.truth_phases = (Eigen::VectorXd(1) << p).finished();
            break;
        }
        case ExcitationConfig::Family::ThunderstormWind: {
            const auto spectrum = build_spectrum(config.excitation);
            Rng rng(derive_seed(config.seed, kStreamTruthPhases));
            const auto phases = excitation::PhaseVector::random(spectrum.size(), rng);
            art.truth_phases = phases.phi();
            const auto env = excitation::Envelope::thunderstorm(config.excitation.gamma_star,
                                                                config.excitation.t_gamma, 1);
            families::ThunderstormDragFamily family(config.excitation.wind, env, spectrum,
                                                    sample_times(duration, config.dt));
            force_fn = family.continuous(art.truth_phases, 1.0);
            break;
        }
        case ExcitationConfig::Family::KanaiTajimi: {
            const auto spectrum = build_spectrum(config.excitation);
            Rng rng(derive_seed(config.seed, kStreamTruthPhases));
            const auto phases = excitation::PhaseVector::random(spectrum.size(), rng);
            art.truth_phases = phases.phi();
            const auto env = excitation::Envelope::seismic_exp_diff(
                config.excitation.envelope_gk, config.excitation.envelope_a,
                config.excitation.envelope_b, config.excitation.envelope_power);
            families::ModulatedSrmFamily family(env, spectrum,
                                                sample_times(duration, config.dt), false);
            force_fn = family.continuous(art.truth_phases, 1.0);
            break;
        }
        case ExcitationConfig::Family::Recorded: {
            if (config.excitation.record_path.empty())
                throw ConfigError("simulate: recorded excitation requires record.path");
            const auto record = ingest_ground_motion(
                config.excitation.record_path, config.excitation.record_format, config.dt,
                config.excitation.record_units, config.excitation.record_scale);
            duration = std::min(duration, record.times[record.times.size() - 1]);
            const Eigen::VectorXd rec_times = record.times;
            const Eigen::VectorXd rec_accel = record.accel;
            const double dt_rec = config.dt;
            force_fn = [rec_times, rec_accel, dt_rec](double t) {
                if (t <= 0.0) return rec_accel[0];
                const auto i = static_cast<Eigen::Index>(t / dt_rec);
                if (i + 1 >= rec_accel.size()) return rec_accel[rec_accel.size() - 1];
                const double w = (t - rec_times[i]) / dt_rec;
                return (1.0 - w) * rec_accel[i] + w * rec_accel[i + 1];
            };
            break;
        }
    }

    Eigen::VectorXd init_state;
    if (config.excitation.family == ExcitationConfig::Family::ThunderstormWind) {
        // The mean wind already loads the structure before the peak; starting
        // from rest would inject a large artificial transient at the natural
        // frequency. Begin at static equilibrium under the initial force.
        init_state = Eigen::VectorXd::Zero(truth.state_dim());
        const Eigen::MatrixXd k = truth.stiffness_matrix(truth.ones_theta());
        init_state.head(truth.ndof()) =
            k.partialPivLu().solve(truth.input_vector() * force_fn(0.0));
    }
    art.trajectory = dynamics::rk4_integrate(truth, force_fn, config.dt, duration, init_state);
    art.observation = dynamics::measure(art.trajectory, config.noise_ratio,
                                        derive_seed(config.seed, kStreamNoise));
    art.truth_force.t = art.trajectory.times;
    art.truth_force.v.resize(art.trajectory.times.size());
    for (Eigen::Index k = 0; k < art.truth_force.t.size(); ++k)
        art.truth_force.v[k] = force_fn(art.truth_force.t[k]);
    return art;
}

std::string run_path(const ExperimentConfig& config, const std::string& filename) {
    return (fs::path(config.output_dir) / filename).string();
}

SimulationArtifacts cmd_simulate(const ExperimentConfig& config) {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cmd_simulate: cannot create " + config.output_dir);

    auto art = simulate(config);
    {
        std::ofstream snap(run_path(config, "config_snapshot.json"), std::ios::binary);
        snap << config_to_json(config);
        if (!snap) throw IoError("cmd_simulate: cannot write the config snapshot");
    }
    {
        std::ofstream seeds(run_path(config, "seeds.txt"), std::ios::binary);
        seeds << "master " << config.seed << "\n";
        seeds << "truth_phases " << derive_seed(config.seed, kStreamTruthPhases) << "\n";
        seeds << "noise " << derive_seed(config.seed, kStreamNoise) << "\n";
        seeds << "ensemble " << derive_seed(config.seed, kStreamEnsemble) << "\n";
        seeds << "train_init " << derive_seed(config.seed, kStreamTrainInit) << "\n";
    }
    dynamics::export_trajectory_csv(art.trajectory, run_path(config, "truth_trajectory.csv"));
    dynamics::export_observation_csv(art.observation, run_path(config, "observation.csv"));
    excitation::export_series_csv(art.truth_force, run_path(config, "truth_excitation.csv"));
    if (config.excitation.family != ExcitationConfig::Family::Sinusoid) {
        excitation::export_spectrum_csv(build_spectrum(config.excitation),
                                        run_path(config, "spectrum.csv"));
    }
    if (art.truth_phases.size()) {
        csv::write_columns(run_path(config, "truth_phases.csv"), {"phi_rad"},
                           {art.truth_phases});
    }
    return art;
}

namespace {

dynamics::Observation read_observation(const ExperimentConfig& config) {
    const auto table = csv::read_table(run_path(config, "observation.csv"));
    dynamics::Observation obs;
    obs.times = table.data.col(0);
    obs.accel_noisy = table.data.rightCols(table.data.cols() - 1);
    obs.noise_ratio = config.noise_ratio;
    obs.seed = derive_seed(config.seed, kStreamNoise);
    return obs;
}

} // namespace

Eigen::VectorXd read_initial_state(const ExperimentConfig& config, int ndof, bool hysteretic) {
    const std::string path = run_path(config, "truth_trajectory.csv");
    if (!fs::exists(path)) return Eigen::VectorXd();
    const auto table = csv::read_table(path);
    Eigen::VectorXd z(2 * ndof + (hysteretic ? 1 : 0));
    for (int i = 0; i < 2 * ndof; ++i) z[i] = table.data(0, 1 + i);
    if (hysteretic) z[2 * ndof] = table.data(0, 1 + 3 * ndof);
    return z;
}

Eigen::VectorXd read_series_csv(const std::string& path, int value_column) {
    const auto table = csv::read_table(path);
    if (value_column >= table.data.cols()) throw IoError("read_series_csv: missing column");
    return table.data.col(value_column);
}

BuiltProblem build_problem(const ExperimentConfig& config, const dynamics::Observation& obs,
                           const Eigen::VectorXd& known_force,
                           const Eigen::VectorXd& initial_state) {
    BuiltProblem built;
    built.observation = std::make_shared<dynamics::Observation>(obs);

    auto model = build_model(config.assumed, config.theta, config.theta_names);
    built.problem = std::make_shared<estimators::Problem>(std::move(model));
    auto& p = *built.problem;
    p.mode = config.mode;
    p.obs = built.observation.get();
    p.weights = config.training.weights;
    p.normalize_by_channel_variance = config.training.normalize_by_channel_variance;
    p.time_scaling = neural::TimeScaling::from_window(obs.times[0], obs.times[obs.times.size() - 1]);

    if (config.mode == estimators::Mode::SapinnRandomPhase ||
        config.mode == estimators::Mode::SapinnTrainedPhase)
        p.family = build_family(config, obs.times);
    if (config.mode == estimators::Mode::PinnKnownForce) {
        if (known_force.size() != obs.times.size())
            throw ConfigError("build_problem: known-force mode needs the truth excitation");
        p.known_force = known_force;
    }

    // Observation-driven scales: displacement ~ RMS(y) / omega_dominant^2,
    // velocity reference via omega_dominant, restoring force order one.
    const int n = p.assumed.ndof();
    const Eigen::Index nt = obs.times.size();
    const double dt = obs.times[1] - obs.times[0];
    int seg = 256;
    while (2 * seg <= nt && seg < 1024) seg *= 2;
    Eigen::VectorXd scales(p.n_latent_outputs());
    double omega_ref = 0.0;
    double rms_mean = 0.0;
    for (int ch = 0; ch < n; ++ch) {
        const Eigen::VectorXd y = obs.accel_noisy.col(ch);
        const double rms = std::sqrt(y.squaredNorm() / static_cast<double>(nt));
        rms_mean += rms / n;
        auto psd = metrics::welch_psd(y, dt, seg, 0.5);
        Eigen::Index peak = 1;
        double best = 0.0;
        for (Eigen::Index i = 1; i < psd.psd.size(); ++i)
            if (psd.psd[i] > best) {
                best = psd.psd[i];
                peak = i;
            }
        const double w_floor = 2.0 * 3.14159265358979323846 /
                               (obs.times[nt - 1] - obs.times[0]) * 4.0;
        const double w_dom = std::max(psd.omega[peak], w_floor);
        omega_ref += w_dom / n;
        scales[ch] = std::max(rms / (w_dom * w_dom), 1e-12);
    }
    if (p.hysteretic()) scales[n] = 1.0;
    if (!config.network.output_scales.empty()) {
        if (static_cast<int>(config.network.output_scales.size()) != p.n_latent_outputs())
            throw ConfigError("build_problem: output_scales length mismatch");
        for (int i = 0; i < p.n_latent_outputs(); ++i)
            scales[i] = config.network.output_scales[static_cast<std::size_t>(i)];
    }
    p.output_scales = scales;
    p.omega_ref = omega_ref;

    if (config.network.force_scale > 0.0) {
        p.force_scale = config.network.force_scale;
    } else if (p.assumed.input().kind == dynamics::InputMap::Kind::BaseExcitation) {
        p.force_scale = std::max(rms_mean, 1e-12);
    } else {
        // Nodal force: cover both inertia- and stiffness-dominated regimes.
        const double m = p.assumed.masses()[p.assumed.input().dof];
        const Eigen::VectorXd wn = dynamics::natural_frequencies(p.assumed, p.assumed.ones_theta());
        const double ratio = wn.minCoeff() / omega_ref;
        p.force_scale = std::max(m * rms_mean * std::max(1.0, ratio * ratio), 1e-12);
    }

    if (config.excitation.family == ExcitationConfig::Family::Sinusoid)
        p.amplitude_scale = 300.0; // matches the documented amplitude initialization

    p.bc_state = initial_state.size() ? initial_state
                                       : Eigen::VectorXd::Zero(2 * n + (p.hysteretic() ? 1 : 0));
    p.validate();
    return built;
}

estimators::InitConfig build_init(const ExperimentConfig& config) {
    estimators::InitConfig init;
    init.hidden_layers = config.network.hidden;
    init.omega0 = config.network.omega0;
    init.n_theta = static_cast<int>(config.theta.size());
    const bool hysteretic = config.assumed.bouc_wen.has_value();
    init.n_outputs = static_cast<int>(config.assumed.masses.size()) + (hysteretic ? 1 : 0);
    if (config.mode == estimators::Mode::SapinnRandomPhase ||
        config.mode == estimators::Mode::SapinnTrainedPhase) {
        init.n_phases = build_spectrum(config.excitation).size();
        init.with_amplitude = config.excitation.family == ExcitationConfig::Family::Sinusoid;
    }
    init.with_force_net = config.mode == estimators::Mode::PinnUnknownForce;
    return init;
}

namespace {

void export_prediction(const ExperimentConfig& config, const estimators::Problem& problem,
                       const estimators::TrainableSet& fitted, const Eigen::VectorXd& times,
                       const std::string& path) {
    const auto pred = estimators::predict(problem, fitted, times);
    std::vector<std::string> header{"t_s"};
    std::vector<Eigen::VectorXd> cols{times};
    for (int i = 0; i < problem.assumed.ndof(); ++i) {
        header.push_back("x" + std::to_string(i + 1));
        cols.push_back(pred.displacement.col(i));
    }
    for (int i = 0; i < problem.assumed.ndof(); ++i) {
        header.push_back("v" + std::to_string(i + 1));
        cols.push_back(pred.velocity.col(i));
    }
    if (problem.hysteretic()) {
        header.push_back("r1");
        cols.push_back(pred.restoring);
        header.push_back("r1_rate");
        cols.push_back(pred.restoring_rate);
    }
    header.push_back("force");
    cols.push_back(pred.force);
    csv::write_columns(path, header, cols);
    (void)config;
}

} // namespace

TrainArtifacts cmd_train(const ExperimentConfig& config) {
    const auto obs = read_observation(config);
    Eigen::VectorXd known_force;
    if (config.mode == estimators::Mode::PinnKnownForce)
        known_force = read_series_csv(run_path(config, "truth_excitation.csv"));
    auto built = build_problem(
        config, obs, known_force,
        read_initial_state(config, static_cast<int>(config.assumed.masses.size()),
                           config.assumed.bouc_wen.has_value()));

    estimators::TrainConfig tc;
    tc.iterations = config.training.iterations;
    tc.learning_rate = config.training.learning_rate;
    tc.log_every = config.training.log_every;

    TrainArtifacts art;
    art.checkpoint_path = run_path(config, "checkpoint.txt");

    const std::uint64_t init_seed = derive_seed(config.seed, kStreamTrainInit);
    estimators::TrainResult result;
    if (fs::exists(art.checkpoint_path)) {
        auto cp = estimators::load_checkpoint(art.checkpoint_path);
        if (cp.iteration >= tc.iterations)
            throw ConfigError("cmd_train: checkpoint already reached the iteration budget");
        result = estimators::train(*built.problem, tc, std::move(cp.trainables), &cp.adam,
                                   cp.iteration);
    } else {
        Rng rng(init_seed);
        auto initial = estimators::init_trainables(build_init(config), rng);
        result = estimators::train(*built.problem, tc, std::move(initial));
    }
    if (result.diverged)
        throw NumericError("cmd_train: training diverged at iteration " +
                           std::to_string(result.diverged_at));

    estimators::save_checkpoint(art.checkpoint_path, result.final, result.adam, init_seed, 0,
                                tc.iterations);
    estimators::export_history_csv(result.history, run_path(config, "training_log.csv"));
    export_prediction(config, *built.problem, result.best, obs.times,
                      run_path(config, "prediction.csv"));
    art.result = std::move(result);
    return art;
}

namespace {

std::string metrics_table(const ExperimentConfig& config, const estimators::Problem& problem,
                          const ensemble::EnsembleResult& result,
                          const ensemble::ParameterStats& pstats) {
    std::ostringstream out;
    out << "metrics table\n";
    out << "kind " << kind_name(config.kind) << "\n";
    out << "mode " << estimators::mode_name(config.mode) << "\n";
    out << "members " << result.members.size() << " included " << result.included.size()
        << "\n\n";

    out << "parameter estimates (ensemble mean and spread)\n";
    for (std::size_t p = 0; p < pstats.names.size(); ++p)
        out << pstats.names[p] << " " << csv::format(pstats.mean[static_cast<Eigen::Index>(p)])
            << " sigma " << csv::format(pstats.sigma[static_cast<Eigen::Index>(p)]) << "\n";

    // MSE block against the stored truth files, using the ensemble mean.
    const std::string traj_path = run_path(config, "truth_trajectory.csv");
    const std::string force_path = run_path(config, "truth_excitation.csv");
    if (fs::exists(traj_path) && fs::exists(force_path)) {
        const auto truth = csv::read_table(traj_path);
        const auto times = truth.data.col(0);
        out << "\nmean-squared errors of the ensemble mean\n";
        const int n = problem.assumed.ndof();
        for (int ch = 0; ch < n; ++ch) {
            const auto member = ensemble::member_displacements(problem, result, times, ch);
            const auto stats = ensemble::series_stats(member);
            out << "MSE(x" << ch + 1 << ") "
                << csv::format(metrics::mse(stats.mean, truth.data.col(1 + ch))) << "\n";
        }
        if (problem.hysteretic()) {
            const Eigen::Index r_col = 1 + 3 * n; // t, x.., v.., a.., r1
            const auto member = ensemble::member_restoring(problem, result, times);
            const auto stats = ensemble::series_stats(member);
            out << "MSE(r1) " << csv::format(metrics::mse(stats.mean, truth.data.col(r_col)))
                << "\n";
        }
        if (config.mode != estimators::Mode::PinnKnownForce) {
            const auto truth_force = read_series_csv(force_path);
            const auto stats = ensemble::force_stats(problem, result, times);
            out << "MSE(U) " << csv::format(metrics::mse(stats.mean, truth_force)) << "\n";
        }
    }
    return out.str();
}

} // namespace

EnsembleArtifacts cmd_ensemble(const ExperimentConfig& config) {
    if (!fs::exists(run_path(config, "observation.csv"))) cmd_simulate(config);
    const auto obs = read_observation(config);
    Eigen::VectorXd known_force;
    if (config.mode == estimators::Mode::PinnKnownForce)
        known_force = read_series_csv(run_path(config, "truth_excitation.csv"));
    auto built = build_problem(
        config, obs, known_force,
        read_initial_state(config, static_cast<int>(config.assumed.masses.size()),
                           config.assumed.bouc_wen.has_value()));

    ensemble::EnsembleSpec spec;
    spec.q_members = config.q_members;
    spec.master_seed = derive_seed(config.seed, kStreamEnsemble);
    spec.train.iterations = config.training.iterations;
    spec.train.learning_rate = config.training.learning_rate;
    spec.train.log_every = config.training.log_every;

    EnsembleArtifacts art;
    art.result = ensemble::run_ensemble(*built.problem, build_init(config), spec);
    art.parameters = ensemble::parameter_stats(*built.problem, art.result);

    const std::string prefix = estimators::mode_name(config.mode);
    ensemble::write_report(run_path(config, prefix + "_ensemble_report.txt"), *built.problem,
                           art.result);
    for (std::size_t q = 0; q < art.result.members.size(); ++q) {
        estimators::save_checkpoint(
            run_path(config, prefix + "_member_" + std::to_string(q) + ".ckpt"),
            art.result.members[q].best, art.result.members[q].adam, art.result.seeds[q], 0,
            config.training.iterations);
        estimators::export_history_csv(
            art.result.members[q].history,
            run_path(config, prefix + "_member_" + std::to_string(q) + "_log.csv"));
    }

    const auto& times = obs.times;
    if (config.mode != estimators::Mode::PinnKnownForce) {
        const auto fstats = ensemble::force_stats(*built.problem, art.result, times);
        ensemble::export_band_csv(times, fstats, run_path(config, prefix + "_force_band.csv"));
    }
    for (int ch = 0; ch < built.problem->assumed.ndof(); ++ch) {
        const auto stats = ensemble::series_stats(
            ensemble::member_displacements(*built.problem, art.result, times, ch));
        ensemble::export_band_csv(
            times, stats,
            run_path(config, prefix + "_displacement_band_x" + std::to_string(ch + 1) + ".csv"));
    }
    if (built.problem->hysteretic()) {
        const auto stats = ensemble::series_stats(
            ensemble::member_restoring(*built.problem, art.result, times));
        ensemble::export_band_csv(times, stats,
                                  run_path(config, prefix + "_restoring_band.csv"));
    }

    {
        std::ofstream metrics_file(run_path(config, prefix + "_metrics.txt"), std::ios::binary);
        metrics_file << metrics_table(config, *built.problem, art.result, art.parameters);
        if (!metrics_file) throw IoError("cmd_ensemble: cannot write the metrics table");
    }

    // PSD comparison of truth vs ensemble-mean reconstruction vs target.
    if (config.mode != estimators::Mode::PinnKnownForce &&
        fs::exists(run_path(config, "truth_excitation.csv"))) {
        const auto truth_force = read_series_csv(run_path(config, "truth_excitation.csv"));
        const auto fstats = ensemble::force_stats(*built.problem, art.result, times);
        const double dt = times[1] - times[0];
        int seg = 256;
        while (2 * seg <= times.size() && seg < 1024) seg *= 2;
        const auto psd_true = metrics::welch_psd(truth_force, dt, seg, 0.5);
        const auto psd_pred = metrics::welch_psd(fstats.mean, dt, seg, 0.5);
        Eigen::VectorXd target(psd_true.omega.size());
        if (config.excitation.family != ExcitationConfig::Family::Sinusoid) {
            const auto spectrum = build_spectrum(config.excitation);
            const auto& gw = spectrum.grid().omega();
            for (Eigen::Index i = 0; i < target.size(); ++i) {
                const double w = psd_true.omega[i];
                if (w <= gw[0] || w >= gw[gw.size() - 1]) {
                    target[i] = 0.0;
                    continue;
                }
                Eigen::Index j = 0;
                while (j + 2 < gw.size() && gw[j + 1] < w) ++j;
                const double frac = (w - gw[j]) / (gw[j + 1] - gw[j]);
                target[i] = (1.0 - frac) * spectrum.psd()[j] + frac * spectrum.psd()[j + 1];
            }
        } else {
            target.setZero();
        }
        csv::write_columns(run_path(config, prefix + "_psd_comparison.csv"),
                           {"omega_rad_s", "psd_true", "psd_pred", "psd_target"},
                           {psd_true.omega, psd_true.psd, psd_pred.psd, target});
    }
    return art;
}

std::string cmd_report(const ExperimentConfig& config) {
    const auto obs = read_observation(config);
    Eigen::VectorXd known_force;
    if (config.mode == estimators::Mode::PinnKnownForce)
        known_force = read_series_csv(run_path(config, "truth_excitation.csv"));
    auto built = build_problem(
        config, obs, known_force,
        read_initial_state(config, static_cast<int>(config.assumed.masses.size()),
                           config.assumed.bouc_wen.has_value()));

    const std::string prefix = estimators::mode_name(config.mode);
    std::ostringstream out;
    out << "run report for " << config.output_dir << "\n\n";

    // Reload members and recompute the statistics tables.
    ensemble::EnsembleResult result;
    for (int q = 0; q < config.q_members; ++q) {
        const std::string path =
            run_path(config, prefix + "_member_" + std::to_string(q) + ".ckpt");
        if (!fs::exists(path)) break;
        estimators::TrainResult member;
        auto cp = estimators::load_checkpoint(path);
        member.best = cp.trainables;
        member.final = cp.trainables;
        member.adam = cp.adam;
        member.best_loss = estimators::evaluate_loss(*built.problem, member.best);
        result.members.push_back(std::move(member));
        result.seeds.push_back(cp.rng_seed);
        result.included.push_back(q);
    }
    if (result.members.size() < 2)
        throw IoError("cmd_report: no ensemble checkpoints found in " + config.output_dir);
    const auto pstats = ensemble::parameter_stats(*built.problem, result);
    out << metrics_table(config, *built.problem, result, pstats);

    // Worst-case-gain diagnostic for the linear kinds.
    if (!built.problem->hysteretic() &&
        config.mode != estimators::Mode::PinnKnownForce &&
        fs::exists(run_path(config, "truth_excitation.csv"))) {
        const auto truth_force = read_series_csv(run_path(config, "truth_excitation.csv"));
        const auto fstats = ensemble::force_stats(*built.problem, result, obs.times);
        const Eigen::VectorXd wn =
            dynamics::natural_frequencies(built.problem->assumed,
                                          built.problem->assumed.ones_theta());
        Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(4000, wn.minCoeff() * 0.05,
                                                          wn.maxCoeff() * 20.0);
        const auto bound = metrics::bound_check(built.problem->assumed, obs.times, truth_force,
                                                fstats.mean, grid);
        out << "\nworst-case gain diagnostic\n";
        out << "input distance times gain: " << csv::format(bound.rhs.maxCoeff()) << "\n";
        out << "response distance: " << csv::format(bound.lhs.maxCoeff()) << "\n";
        out << "ratio: " << csv::format(bound.max_ratio) << "\n";
    }
    const std::string text = out.str();
    std::ofstream file(run_path(config, prefix + "_report_recomputed.txt"), std::ios::binary);
    file << text;
    return text;
}

} // namespace sapinn::experiment
