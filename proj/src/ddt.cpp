#include "nsrl/ddt.hpp"

#include <json.hpp>
#include <sstream>

#include "nsrl/io.hpp"

namespace nsrl::ddt {

using nlohmann::json;

double crisp_action(const Ddt<double>& t, const VecD& x) {
    if (x.size() != t.input_dim()) throw UsageError("crisp_action: dimension mismatch");
    const int internal = (1 << t.depth) - 1;
    int i = 0;
    while (i < internal) {
        const auto& n = t.nodes[static_cast<size_t>(i)];
        const double m = n.w.dot(x) - n.threshold;
        i = m > 0.0 ? 2 * i + 1 : 2 * i + 2;
    }
    const auto& logits = t.leaves[static_cast<size_t>(i - internal)].logits;
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    return t.action_levels(best);
}

namespace {

DdtLeaf<double> one_hot_leaf(int n_actions, Eigen::Index hot) {
    DdtLeaf<double> leaf;
    leaf.logits = VecD::Zero(n_actions);
    leaf.logits(hot) = kOneHotLogit;
    return leaf;
}

Eigen::Index level_index(const VecD& levels, double value) {
    for (Eigen::Index i = 0; i < levels.size(); ++i)
        if (levels(i) == value) return i;
    throw UsageError("warm_start_precool: action levels must contain 15, 20 and 30");
}

}  // namespace

Ddt<double> warm_start_precool(const VecD& levels, double sharpness) {
    for (Eigen::Index i = 0; i + 1 < levels.size(); ++i)
        if (!(levels(i) < levels(i + 1)))
            throw UsageError("warm_start_precool: levels must be strictly increasing");
    const Eigen::Index i15 = level_index(levels, 15.0);
    const Eigen::Index i20 = level_index(levels, 20.0);
    const Eigen::Index i30 = level_index(levels, 30.0);
    const int n = static_cast<int>(levels.size());

    // attributes: (T_in, T_out, P_cur, P_fut)
    auto price_node = [&](int attr) {
        DdtNode<double> node;
        node.w = VecD::Zero(4);
        node.w(attr) = 1.0;
        node.threshold = 1.5;
        node.sharpness = sharpness;
        return node;
    };

    Ddt<double> t;
    t.depth = 2;
    t.action_levels = levels;
    t.nodes = {price_node(2),   // P_cur > 1.5
               price_node(2),   // redundant repeat on the TRUE side
               price_node(3)};  // P_fut > 1.5
    t.leaves = {one_hot_leaf(n, i30), one_hot_leaf(n, i30),   // TRUE subtree: off (30)
                one_hot_leaf(n, i15), one_hot_leaf(n, i20)};  // precool / normal
    return t;
}

Ddt<double> crispen(const Ddt<double>& t, double crisp_sharpness) {
    Ddt<double> out = t;
    for (auto& n : out.nodes) {
        Eigen::Index best = 0;
        n.w.cwiseAbs().maxCoeff(&best);
        const double sign = n.w(best) < 0.0 ? -1.0 : 1.0;
        n.w = VecD::Zero(n.w.size());
        n.w(best) = sign;
        n.sharpness = crisp_sharpness;
    }
    for (auto& leaf : out.leaves) {
        Eigen::Index best = 0;
        leaf.logits.maxCoeff(&best);
        leaf = one_hot_leaf(out.n_actions(), best);
    }
    return out;
}

Ddt<ad::Var> lift(const Ddt<double>& t, ad::Tape& tape) {
    Ddt<ad::Var> out;
    out.depth = t.depth;
    out.action_levels = t.action_levels;
    out.nodes.reserve(t.nodes.size());
    for (const auto& n : t.nodes) {
        DdtNode<ad::Var> v;
        v.w.resize(n.w.size());
        for (Eigen::Index j = 0; j < n.w.size(); ++j) v.w(j) = tape.lift(n.w(j));
        v.threshold = tape.lift(n.threshold);
        v.sharpness = tape.lift(n.sharpness);
        out.nodes.push_back(std::move(v));
    }
    out.leaves.reserve(t.leaves.size());
    for (const auto& leaf : t.leaves) {
        DdtLeaf<ad::Var> v;
        v.logits.resize(leaf.logits.size());
        for (Eigen::Index k = 0; k < leaf.logits.size(); ++k) v.logits(k) = tape.lift(leaf.logits(k));
        out.leaves.push_back(std::move(v));
    }
    return out;
}

VecD flatten(const Ddt<double>& t) {
    std::vector<double> v;
    for (const auto& n : t.nodes) {
        for (Eigen::Index j = 0; j < n.w.size(); ++j) v.push_back(n.w(j));
        v.push_back(n.threshold);
        v.push_back(std::log(n.sharpness));
    }
    for (const auto& leaf : t.leaves)
        for (Eigen::Index k = 0; k < leaf.logits.size(); ++k) v.push_back(leaf.logits(k));
    return Eigen::Map<VecD>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Ddt<double> unflatten(const Ddt<double>& proto, const VecD& params) {
    Ddt<double> out = proto;
    Eigen::Index k = 0;
    for (auto& n : out.nodes) {
        for (Eigen::Index j = 0; j < n.w.size(); ++j) n.w(j) = params(k++);
        n.threshold = params(k++);
        n.sharpness = std::exp(params(k++));
    }
    for (auto& leaf : out.leaves)
        for (Eigen::Index j = 0; j < leaf.logits.size(); ++j) leaf.logits(j) = params(k++);
    if (k != params.size()) throw UsageError("unflatten: parameter count mismatch");
    return out;
}

void read_gradients(const Ddt<ad::Var>& t, VecD& out) {
    std::vector<double> v;
    for (const auto& n : t.nodes) {
        for (Eigen::Index j = 0; j < n.w.size(); ++j) v.push_back(n.w(j).grad());
        v.push_back(n.threshold.grad());
        // flat slot holds log gamma, so chain through gamma
        v.push_back(n.sharpness.grad() * n.sharpness.value());
    }
    for (const auto& leaf : t.leaves)
        for (Eigen::Index k = 0; k < leaf.logits.size(); ++k) v.push_back(leaf.logits(k).grad());
    out = Eigen::Map<VecD>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Ddt<double> random_ddt(int depth, int input_dim, const VecD& levels, std::mt19937& rng) {
    if (depth < 1) throw UsageError("random_ddt: depth must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    Ddt<double> t;
    t.depth = depth;
    t.action_levels = levels;
    const int internal = (1 << depth) - 1;
    for (int i = 0; i < internal; ++i) {
        DdtNode<double> n;
        n.w.resize(input_dim);
        for (Eigen::Index j = 0; j < input_dim; ++j) n.w(j) = normal(rng);
        n.threshold = normal(rng);
        n.sharpness = 1.0;
        t.nodes.push_back(std::move(n));
    }
    for (int i = 0; i < (1 << depth); ++i) {
        DdtLeaf<double> leaf;
        leaf.logits.resize(levels.size());
        for (Eigen::Index k = 0; k < levels.size(); ++k) leaf.logits(k) = normal(rng);
        t.leaves.push_back(std::move(leaf));
    }
    return t;
}

namespace {

void render_rec(const Ddt<double>& t, const std::vector<std::string>& names, int node, int depth,
                std::ostringstream& out) {
    const int internal = (1 << t.depth) - 1;
    const std::string pad(static_cast<size_t>(2 * depth), ' ');
    if (node >= internal) {
        const auto& logits = t.leaves[static_cast<size_t>(node - internal)].logits;
        Eigen::Index best = 0;
        logits.maxCoeff(&best);
        out << pad << "-> " << io::format_double(t.action_levels(best)) << "\n";
        return;
    }
    const auto& n = t.nodes[static_cast<size_t>(node)];
    out << pad << "if ";
    bool first = true;
    for (Eigen::Index j = 0; j < n.w.size(); ++j) {
        if (n.w(j) == 0.0) continue;
        if (!first) out << " + ";
        out << io::format_double(n.w(j)) << "*"
            << (j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<size_t>(j)]
                                                            : "x" + std::to_string(j));
        first = false;
    }
    if (first) out << "0";
    out << " - " << io::format_double(n.threshold) << " > 0:\n";
    render_rec(t, names, 2 * node + 1, depth + 1, out);
    out << pad << "else:\n";
    render_rec(t, names, 2 * node + 2, depth + 1, out);
}

}  // namespace

std::string render(const Ddt<double>& t, const std::vector<std::string>& attr_names) {
    std::ostringstream out;
    render_rec(t, attr_names, 0, 0, out);
    return out.str();
}

std::string to_json(const Ddt<double>& t) {
    json j;
    j["schema_version"] = 1;
    j["depth"] = t.depth;
    j["action_levels"] = std::vector<double>(t.action_levels.data(),
                                             t.action_levels.data() + t.action_levels.size());
    j["nodes"] = json::array();
    for (const auto& n : t.nodes) {
        json jn;
        jn["w"] = std::vector<double>(n.w.data(), n.w.data() + n.w.size());
        jn["c"] = n.threshold;
        jn["gamma"] = n.sharpness;
        j["nodes"].push_back(jn);
    }
    j["leaves"] = json::array();
    for (const auto& leaf : t.leaves) {
        json jl;
        jl["logits"] =
            std::vector<double>(leaf.logits.data(), leaf.logits.data() + leaf.logits.size());
        j["leaves"].push_back(jl);
    }
    return j.dump(2) + "\n";
}

Ddt<double> from_json(const std::string& text) {
    json j = json::parse(text);
    Ddt<double> t;
    t.depth = j.at("depth").get<int>();
    auto levels = j.at("action_levels").get<std::vector<double>>();
    t.action_levels = Eigen::Map<VecD>(levels.data(), static_cast<Eigen::Index>(levels.size()));
    for (const auto& jn : j.at("nodes")) {
        DdtNode<double> n;
        auto w = jn.at("w").get<std::vector<double>>();
        n.w = Eigen::Map<VecD>(w.data(), static_cast<Eigen::Index>(w.size()));
        n.threshold = jn.at("c").get<double>();
        n.sharpness = jn.at("gamma").get<double>();
        t.nodes.push_back(std::move(n));
    }
    for (const auto& jl : j.at("leaves")) {
        DdtLeaf<double> leaf;
        auto logits = jl.at("logits").get<std::vector<double>>();
        leaf.logits = Eigen::Map<VecD>(logits.data(), static_cast<Eigen::Index>(logits.size()));
        t.leaves.push_back(std::move(leaf));
    }
    const int internal = (1 << t.depth) - 1;
    if (static_cast<int>(t.nodes.size()) != internal ||
        static_cast<int>(t.leaves.size()) != internal + 1)
        throw ConfigError("ddt: node/leaf counts do not match a complete tree");
    return t;
}

void save(const Ddt<double>& t, const std::string& path) { io::write_file(path, to_json(t)); }

Ddt<double> load(const std::string& path) { return from_json(io::read_file(path)); }

}  // namespace nsrl::ddt
