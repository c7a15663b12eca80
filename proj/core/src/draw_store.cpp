#include "medsurv/draw_store.hpp"
#include "medsurv/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace medsurv {

using nlohmann::json;

namespace {

constexpr const char *kSchemaTag = "medsurv-draws-v1";

json vec_to_json(const std::vector<double> &v) { return json(v); }

json eigen_to_json(const Eigen::VectorXd &v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd eigen_from_json(const json &j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

json theta_to_json(const ThetaParams &tp, const CovariateSchema &schema) {
    json j;
    j["theta_m"] = eigen_to_json(tp.theta_m);
    j["theta_l"] = eigen_to_json(tp.theta_l);
    j["theta_z"] = eigen_to_json(tp.theta_z);
    j["eta_m"] = eigen_to_json(tp.eta_m);
    j["eta_l"] = eigen_to_json(tp.eta_l);
    j["eta_z"] = eigen_to_json(tp.eta_z);
    j["sigma2_m"] = tp.sigma2_m;
    json base = json::array();
    for (std::size_t p = 0; p < tp.baseline.size(); ++p) {
        if (schema.baseline_kinds[p] == CovariateKind::kBinary)
            base.push_back(json{{"prob", tp.baseline[p].prob}});
        else
            base.push_back(json{{"mean", tp.baseline[p].mean}, {"var", tp.baseline[p].var}});
    }
    j["baseline"] = base;
    return j;
}

ThetaParams theta_from_json(const json &j, const CovariateSchema &schema) {
    ThetaParams tp;
    tp.theta_m = eigen_from_json(j.at("theta_m"));
    tp.theta_l = eigen_from_json(j.at("theta_l"));
    tp.theta_z = eigen_from_json(j.at("theta_z"));
    tp.eta_m = eigen_from_json(j.at("eta_m"));
    tp.eta_l = eigen_from_json(j.at("eta_l"));
    tp.eta_z = eigen_from_json(j.at("eta_z"));
    tp.sigma2_m = j.at("sigma2_m").get<double>();
    const json &base = j.at("baseline");
    tp.baseline.resize(base.size());
    for (std::size_t p = 0; p < base.size(); ++p) {
        if (schema.baseline_kinds[p] == CovariateKind::kBinary)
            tp.baseline[p].prob = base[p].at("prob").get<double>();
        else {
            tp.baseline[p].mean = base[p].at("mean").get<double>();
            tp.baseline[p].var = base[p].at("var").get<double>();
        }
    }
    return tp;
}

json state_to_json(const PosteriorState &st, const CovariateSchema &schema) {
    json j;
    json assign = json::array();
    for (const auto &a : st.assignments) assign.push_back(json::array({a.outer, a.inner}));
    j["assign"] = assign;
    j["outer_sticks"] = vec_to_json(st.sticks.outer_sticks);
    json inner = json::array();
    for (const auto &row : st.sticks.inner_sticks) inner.push_back(vec_to_json(row));
    j["inner_sticks"] = inner;
    j["alpha_beta"] = st.alpha_beta;
    j["alpha_theta"] = vec_to_json(st.alpha_theta);

    json betas = json::array();
    for (const auto &sp : st.beta_params)
        betas.push_back(json{{"lambdas", sp.lambdas}, {"betas", sp.betas}});
    j["beta_params"] = betas;

    json thetas = json::array();
    for (const auto &row : st.theta_params) {
        json jrow = json::array();
        for (const auto &tp : row) jrow.push_back(theta_to_json(tp, schema));
        thetas.push_back(jrow);
    }
    j["theta_params"] = thetas;

    const auto &re = st.random_effects;
    j["random_effects"] = json{{"b_m", re.b_m},   {"b_l", re.b_l},   {"b_z", re.b_z},
                               {"var_m", re.var_m}, {"var_l", re.var_l}, {"var_z", re.var_z}};
    return j;
}

PosteriorState state_from_json(const json &j, Truncation trunc, const CovariateSchema &schema) {
    PosteriorState st;
    st.trunc = trunc;
    for (const auto &a : j.at("assign"))
        st.assignments.push_back({a[0].get<int>(), a[1].get<int>()});
    st.sticks.outer_sticks = j.at("outer_sticks").get<std::vector<double>>();
    for (const auto &row : j.at("inner_sticks"))
        st.sticks.inner_sticks.push_back(row.get<std::vector<double>>());
    st.sticks.recompute_weights();
    st.alpha_beta = j.at("alpha_beta").get<double>();
    st.alpha_theta = j.at("alpha_theta").get<std::vector<double>>();

    for (const auto &sp : j.at("beta_params")) {
        SurvivalParams p;
        p.lambdas = sp.at("lambdas").get<std::vector<double>>();
        p.betas = sp.at("betas").get<std::vector<double>>();
        st.beta_params.push_back(std::move(p));
    }
    for (const auto &row : j.at("theta_params")) {
        std::vector<ThetaParams> tprow;
        for (const auto &tp : row) tprow.push_back(theta_from_json(tp, schema));
        st.theta_params.push_back(std::move(tprow));
    }
    const auto &re = j.at("random_effects");
    st.random_effects.b_m = re.at("b_m").get<std::vector<double>>();
    st.random_effects.b_l = re.at("b_l").get<std::vector<double>>();
    st.random_effects.b_z = re.at("b_z").get<std::vector<double>>();
    st.random_effects.var_m = re.at("var_m").get<double>();
    st.random_effects.var_l = re.at("var_l").get<double>();
    st.random_effects.var_z = re.at("var_z").get<double>();
    return st;
}

} // namespace

void write_draw_store(const DrawStore &store, const std::filesystem::path &file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write '" + file.string() + "'");

    json header;
    header["schema"] = kSchemaTag;
    header["truncation"] = json{{"N", store.trunc.N}, {"M", store.trunc.M}};
    header["burn_in"] = store.burn_in;
    header["seed"] = store.seed;
    header["baseline_names"] = store.context.schema.baseline_names;
    json kinds = json::array();
    for (auto k : store.context.schema.baseline_kinds)
        kinds.push_back(k == CovariateKind::kBinary ? "binary" : "continuous");
    header["baseline_kinds"] = kinds;
    header["mediator_kind"] =
        store.context.schema.mediator_kind == CovariateKind::kBinary ? "binary" : "continuous";
    header["knots"] = store.context.basis.knots();
    header["eigen_floor"] = store.context.basis.eigen_floor();
    header["cutpoints"] = store.context.partition.cutpoints;
    out << header.dump() << "\n";

    for (const auto &st : store.draws)
        out << state_to_json(st, store.context.schema).dump() << "\n";
}

DrawStore read_draw_store(const std::filesystem::path &file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open draw store '" + file.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("draw store '" + file.string() + "' is empty");

    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.contains("schema") ||
        header["schema"].get<std::string>() != kSchemaTag)
        throw DataError("draw store '" + file.string() + "': unrecognized schema");

    DrawStore store;
    store.trunc.N = header.at("truncation").at("N").get<std::size_t>();
    store.trunc.M = header.at("truncation").at("M").get<std::size_t>();
    store.burn_in = header.at("burn_in").get<std::size_t>();
    store.seed = header.at("seed").get<std::uint64_t>();

    CovariateSchema schema;
    schema.baseline_names = header.at("baseline_names").get<std::vector<std::string>>();
    for (const auto &k : header.at("baseline_kinds"))
        schema.baseline_kinds.push_back(k.get<std::string>() == "binary" ? CovariateKind::kBinary
                                                                         : CovariateKind::kContinuous);
    schema.mediator_kind = header.at("mediator_kind").get<std::string>() == "binary"
                               ? CovariateKind::kBinary
                               : CovariateKind::kContinuous;

    store.context.schema = schema;
    store.context.basis = SplineBasis::make(header.at("knots").get<std::vector<double>>(),
                                            header.at("eigen_floor").get<double>());
    store.context.partition.cutpoints = header.at("cutpoints").get<std::vector<double>>();
    store.context.partition.validate();

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw DataError("draw store '" + file.string() + "': bad JSON at line " +
                            std::to_string(line_no));
        store.draws.push_back(state_from_json(j, store.trunc, schema));
    }
    return store;
}

void write_acceptance_log(const std::vector<AcceptanceRecord> &log,
                          const std::filesystem::path &file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write '" + file.string() + "'");
    out << "iteration,block,rate,scale\n";
    for (const auto &rec : log)
        out << rec.iteration << "," << rec.block << "," << rec.rate << "," << rec.scale << "\n";
}

} // namespace medsurv
