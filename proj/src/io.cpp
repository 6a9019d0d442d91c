#include "lporl/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lporl/errors.hpp"

namespace lporl {

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

Json vector_to_json(const Vector& v) {
    Json arr = Json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Vector vector_from_json(const Json& arr) {
    Vector v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i].get<double>();
    return v;
}

Json matrix_to_json(const Matrix& m) {
    Json arr = Json::array();
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

Matrix matrix_from_json(const Json& arr, int rows, int cols) {
    if (static_cast<int>(arr.size()) != rows * cols)
        throw ConfigInvalid("matrix field has " + std::to_string(arr.size()) +
                            " entries, expected " + std::to_string(rows * cols));
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = arr[i * cols + j].get<double>();
    return m;
}

}  // namespace

Json mdp_to_json(const LinearMDP& mdp) {
    Json j;
    j["num_states"] = mdp.num_states;
    j["num_actions"] = mdp.num_actions;
    j["dim"] = mdp.dim;
    j["phi"] = matrix_to_json(mdp.features);
    j["psi"] = matrix_to_json(mdp.next_state_factor);
    j["omega"] = vector_to_json(mdp.reward_factor);
    j["nu0"] = vector_to_json(mdp.init_dist);
    j["gamma"] = mdp.discount;
    return j;
}

LinearMDP mdp_from_json(const Json& j) {
    if (j.contains("P")) {
        const Json& p_json = j.at("P");
        const Json& r_json = j.at("r");
        const int num_states = static_cast<int>(p_json.size());
        if (num_states == 0) throw ConfigInvalid("empty transition table");
        const int num_actions = static_cast<int>(p_json[0].size());
        std::vector<std::vector<Vector>> p(num_states);
        std::vector<Vector> r(num_states);
        for (int x = 0; x < num_states; ++x) {
            p[x].resize(num_actions);
            r[x] = Vector(num_actions);
            for (int a = 0; a < num_actions; ++a) {
                p[x][a] = vector_from_json(p_json[x][a]);
                r[x][a] = r_json[x][a].get<double>();
            }
        }
        return tabular_to_linear(p, r, vector_from_json(j.at("nu0")),
                                 j.at("gamma").get<double>());
    }

    LinearMDP mdp;
    mdp.num_states = j.at("num_states").get<int>();
    mdp.num_actions = j.at("num_actions").get<int>();
    mdp.dim = j.at("dim").get<int>();
    mdp.features = matrix_from_json(j.at("phi"), mdp.num_states * mdp.num_actions, mdp.dim);
    mdp.next_state_factor = matrix_from_json(j.at("psi"), mdp.dim, mdp.num_states);
    mdp.reward_factor = vector_from_json(j.at("omega"));
    mdp.init_dist = vector_from_json(j.at("nu0"));
    mdp.discount = j.at("gamma").get<double>();
    mdp.compute_bounds();
    mdp.validate();
    return mdp;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigInvalid("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << content;
}

LinearMDP load_mdp(const std::string& path) {
    return mdp_from_json(Json::parse(read_text_file(path)));
}

void save_mdp(const LinearMDP& mdp, const std::string& path) {
    write_text_file(path, mdp_to_json(mdp).dump(2) + "\n");
}

std::string mdp_hash(const LinearMDP& mdp) {
    const std::string dump = mdp_to_json(mdp).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_dataset(const Dataset& data, const std::string& path,
                  const std::string& mdp_hash_hex, const std::string& behavior_spec) {
    std::ostringstream out;
    out << "x0,x,a,r,x_next\n";
    for (const Transition& w : data.transitions) {
        if (data.setting == Setting::discounted) out << w.x0;
        out << ',' << w.x << ',' << w.a << ',' << format_double(w.r) << ','
            << w.x_next << '\n';
    }
    write_text_file(path, out.str());

    Json meta;
    meta["mdp_hash"] = mdp_hash_hex;
    meta["behavior"] = behavior_spec;
    meta["seed"] = data.seed;
    meta["setting"] = to_string(data.setting);
    meta["source"] = to_string(data.source);
    meta["n"] = data.transitions.size();
    write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

Dataset load_dataset(const std::string& path) {
    const Json meta = Json::parse(read_text_file(path + ".meta.json"));
    Dataset data;
    data.setting = meta.at("setting").get<std::string>() == "average"
                       ? Setting::average
                       : Setting::discounted;
    data.seed = meta.at("seed").get<std::uint64_t>();
    data.source = meta.at("source").get<std::string>() == "rollout"
                      ? SampleSourceKind::rollout
                      : SampleSourceKind::exact_categorical;

    std::istringstream in(read_text_file(path));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Transition w;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        w.x0 = cell.empty() ? -1 : std::stoi(cell);
        std::getline(row, cell, ',');
        w.x = std::stoi(cell);
        std::getline(row, cell, ',');
        w.a = std::stoi(cell);
        std::getline(row, cell, ',');
        w.r = std::stod(cell);
        std::getline(row, cell, ',');
        w.x_next = std::stoi(cell);
        data.transitions.push_back(w);
    }
    if (data.transitions.size() != meta.at("n").get<std::size_t>())
        throw ConfigInvalid("dataset row count does not match sidecar");
    return data;
}

void write_trace_csv(const std::vector<TraceRow>& trace, Setting setting,
                     const std::string& path) {
    std::ostringstream out;
    out << "t,samples,exact_return,subopt,gap,term_theta,term_beta,term_pi";
    if (setting == Setting::average) out << ",term_rho,rho_t";
    out << '\n';
    for (const TraceRow& row : trace) {
        out << row.t << ',' << row.samples << ',' << format_double(row.exact_return)
            << ',' << format_double(row.subopt) << ',' << format_double(row.gap) << ','
            << format_double(row.term_theta) << ',' << format_double(row.term_beta)
            << ',' << format_double(row.term_pi);
        if (setting == Setting::average)
            out << ',' << format_double(row.term_rho) << ',' << format_double(row.rho_t);
        out << '\n';
    }
    write_text_file(path, out.str());
}

Json solver_config_to_json(const SolverConfig& config, Setting setting) {
    Json j;
    j["T"] = config.t_outer;
    j["K"] = config.k_inner;
    j["c"] = config.c;
    j["alpha"] = config.alpha;
    j["zeta"] = config.zeta;
    j["eta"] = config.eta;
    if (setting == Setting::average) j["xi"] = config.xi;
    j["D_theta"] = config.d_theta;
    j["D_beta"] = config.d_beta;
    j["eval_every"] = config.eval_every;
    j["seed"] = config.seed;
    return j;
}

SolverConfig solver_config_from_json(const Json& j, Setting setting) {
    SolverConfig config;
    config.t_outer = j.at("T").get<int>();
    config.k_inner = j.at("K").get<int>();
    config.c = j.at("c").get<double>();
    config.alpha = j.at("alpha").get<double>();
    config.zeta = j.at("zeta").get<double>();
    config.eta = j.at("eta").get<double>();
    if (j.contains("xi")) config.xi = j.at("xi").get<double>();
    config.d_theta = j.at("D_theta").get<double>();
    config.d_beta = j.at("D_beta").get<double>();
    if (j.contains("eval_every")) config.eval_every = j.at("eval_every").get<int>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    config.validate(setting);
    return config;
}

Json gap_report_to_json(const GapReport& report, Setting setting) {
    Json j;
    j["gap"] = report.gap;
    j["term_theta"] = report.term_theta;
    j["term_beta"] = report.term_beta;
    j["term_pi"] = report.term_pi;
    if (setting == Setting::average) j["term_rho"] = report.term_rho;
    j["suboptimality"] = report.suboptimality;
    return j;
}

}  // namespace lporl
