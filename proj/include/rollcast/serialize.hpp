#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "rollcast/errors.hpp"
#include "rollcast/model.hpp"

namespace rollcast {

// Model state files: "RCMD" magic, format version, algorithm tag, then the
// hyperparameters and fitted arrays as little-endian IEEE-754 doubles and
// 64-bit integers. Round-trips predictions bit-exactly.

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

namespace detail {

constexpr char kModelMagic[4] = {'R', 'C', 'M', 'D'};
constexpr std::uint32_t kModelVersion = 1;

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i64(std::int64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void doubles(const std::vector<double>& v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(double));
    }
    void raw(const void* p, std::size_t bytes) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
    }

private:
    std::ostream& out_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in) : in_(in) {}

    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    std::int64_t i64() { return get<std::int64_t>(); }
    double f64() { return get<double>(); }
    std::vector<double> doubles() {
        std::vector<double> v(u64());
        raw(v.data(), v.size() * sizeof(double));
        return v;
    }
    void raw(void* p, std::size_t bytes) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
        if (!in_) throw ParseError("truncated model file");
    }

private:
    template <class T>
    T get() {
        T v;
        raw(&v, sizeof v);
        return v;
    }
    std::istream& in_;
};

inline void write_tree(BinaryWriter& w, const Tree& t) {
    w.u64(t.nodes.size());
    for (const TreeNode& nd : t.nodes) {
        w.i64(nd.feature);
        w.f64(nd.threshold);
        w.i64(nd.left);
        w.i64(nd.right);
        w.f64(nd.value);
    }
}

inline Tree read_tree(BinaryReader& r) {
    Tree t;
    t.nodes.resize(r.u64());
    for (TreeNode& nd : t.nodes) {
        nd.feature = static_cast<int>(r.i64());
        nd.threshold = r.f64();
        nd.left = static_cast<int>(r.i64());
        nd.right = static_cast<int>(r.i64());
        nd.value = r.f64();
    }
    return t;
}

}  // namespace detail

inline void save_model(const TrainedModel& model, std::ostream& out) {
    detail::BinaryWriter w(out);
    w.raw(detail::kModelMagic, 4);
    w.u32(detail::kModelVersion);
    w.u32(static_cast<std::uint32_t>(model.spec.algorithm()));
    w.u64(model.spec.seed);
    w.u64(model.feature_count);
    w.f64(model.train_duration);

    switch (model.spec.algorithm()) {
        case Algorithm::Gbrt: {
            const auto& p = std::get<GbrtParams>(model.spec.hyperparameters);
            w.i64(p.n_estimators);
            w.f64(p.learning_rate);
            w.i64(p.max_depth);
            w.f64(p.lambda_l2);
            w.f64(p.min_child_weight);
            const auto& m = std::get<GbrtModel>(model.state);
            w.f64(m.base_score);
            w.u64(m.trees.size());
            for (const Tree& t : m.trees) detail::write_tree(w, t);
            w.doubles(m.stage_train_rmse);
            break;
        }
        case Algorithm::RandomForest: {
            const auto& p = std::get<ForestParams>(model.spec.hyperparameters);
            w.i64(p.n_estimators);
            w.i64(p.max_depth);
            w.i64(p.min_samples_leaf);
            w.f64(p.feature_fraction);
            const auto& m = std::get<ForestModel>(model.state);
            w.u64(m.trees.size());
            for (const Tree& t : m.trees) detail::write_tree(w, t);
            break;
        }
        case Algorithm::Mlp: {
            const auto& p = std::get<MlpParams>(model.spec.hyperparameters);
            w.u64(p.hidden_layers.size());
            for (int h : p.hidden_layers) w.i64(h);
            w.i64(p.epochs);
            w.i64(p.batch_size);
            w.f64(p.step_size);
            w.f64(p.init_scale);
            const auto& m = std::get<MlpModel>(model.state);
            w.u64(m.weights.size());
            for (std::size_t l = 0; l < m.weights.size(); ++l) {
                w.u64(static_cast<std::uint64_t>(m.weights[l].rows()));
                w.u64(static_cast<std::uint64_t>(m.weights[l].cols()));
                w.raw(m.weights[l].data(),
                      static_cast<std::size_t>(m.weights[l].size()) * sizeof(double));
                w.raw(m.biases[l].data(),
                      static_cast<std::size_t>(m.biases[l].size()) * sizeof(double));
            }
            w.doubles(m.epoch_losses);
            break;
        }
        case Algorithm::Svr: {
            const auto& p = std::get<SvrParams>(model.spec.hyperparameters);
            w.f64(p.C);
            w.f64(p.epsilon);
            w.f64(p.gamma);
            w.f64(p.tolerance);
            w.i64(p.max_passes);
            const auto& m = std::get<SvrModel>(model.state);
            w.f64(m.gamma_effective);
            w.f64(m.bias);
            w.u32(m.converged ? 1 : 0);
            w.i64(m.iterations);
            w.f64(m.final_violation);
            w.doubles(m.beta);
            w.doubles(m.sv_targets);
            w.doubles(m.support_vectors);
            break;
        }
    }
}

inline void save_model(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    save_model(model, out);
}

inline TrainedModel load_model(std::istream& in) {
    detail::BinaryReader r(in);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, detail::kModelMagic, 4) != 0)
        throw ParseError("not a model file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != detail::kModelVersion)
        throw ParseError("unsupported model file version " + std::to_string(version));
    const auto algorithm = static_cast<Algorithm>(r.u32());

    TrainedModel model;
    model.spec.seed = r.u64();
    model.feature_count = r.u64();
    model.train_duration = r.f64();

    switch (algorithm) {
        case Algorithm::Gbrt: {
            GbrtParams p;
            p.n_estimators = static_cast<int>(r.i64());
            p.learning_rate = r.f64();
            p.max_depth = static_cast<int>(r.i64());
            p.lambda_l2 = r.f64();
            p.min_child_weight = r.f64();
            GbrtModel m;
            m.params = p;
            m.feature_count = model.feature_count;
            m.base_score = r.f64();
            m.trees.resize(r.u64());
            for (Tree& t : m.trees) t = detail::read_tree(r);
            m.stage_train_rmse = r.doubles();
            model.spec.hyperparameters = p;
            model.state = std::move(m);
            break;
        }
        case Algorithm::RandomForest: {
            ForestParams p;
            p.n_estimators = static_cast<int>(r.i64());
            p.max_depth = static_cast<int>(r.i64());
            p.min_samples_leaf = static_cast<int>(r.i64());
            p.feature_fraction = r.f64();
            ForestModel m;
            m.params = p;
            m.seed = model.spec.seed;
            m.feature_count = model.feature_count;
            m.trees.resize(r.u64());
            for (Tree& t : m.trees) t = detail::read_tree(r);
            model.spec.hyperparameters = p;
            model.state = std::move(m);
            break;
        }
        case Algorithm::Mlp: {
            MlpParams p;
            p.hidden_layers.resize(r.u64());
            for (int& h : p.hidden_layers) h = static_cast<int>(r.i64());
            p.epochs = static_cast<int>(r.i64());
            p.batch_size = static_cast<int>(r.i64());
            p.step_size = r.f64();
            p.init_scale = r.f64();
            MlpModel m;
            m.params = p;
            m.seed = model.spec.seed;
            m.feature_count = model.feature_count;
            const std::size_t n_layers = r.u64();
            for (std::size_t l = 0; l < n_layers; ++l) {
                const auto rows = static_cast<Eigen::Index>(r.u64());
                const auto cols = static_cast<Eigen::Index>(r.u64());
                Eigen::MatrixXd w(rows, cols);
                r.raw(w.data(), static_cast<std::size_t>(w.size()) * sizeof(double));
                Eigen::VectorXd b(cols);
                r.raw(b.data(), static_cast<std::size_t>(b.size()) * sizeof(double));
                m.weights.push_back(std::move(w));
                m.biases.push_back(std::move(b));
            }
            m.epoch_losses = r.doubles();
            model.spec.hyperparameters = p;
            model.state = std::move(m);
            break;
        }
        case Algorithm::Svr: {
            SvrParams p;
            p.C = r.f64();
            p.epsilon = r.f64();
            p.gamma = r.f64();
            p.tolerance = r.f64();
            p.max_passes = r.i64();
            SvrModel m;
            m.params = p;
            m.feature_count = model.feature_count;
            m.gamma_effective = r.f64();
            m.bias = r.f64();
            m.converged = r.u32() != 0;
            m.iterations = r.i64();
            m.final_violation = r.f64();
            m.beta = r.doubles();
            m.sv_targets = r.doubles();
            m.support_vectors = r.doubles();
            model.spec.hyperparameters = p;
            model.state = std::move(m);
            break;
        }
        default:
            throw ParseError("unknown algorithm tag in model file");
    }
    return model;
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file '" + path + "'");
    return load_model(in);
}

}  // namespace rollcast
