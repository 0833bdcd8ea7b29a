#include "adprog/model.hpp"

#include "adprog/errors.hpp"
#include "adprog/textio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace adprog {

using json = nlohmann::json;

std::string MlpHyperparams::describe() const {
    std::ostringstream os;
    os << "hidden=";
    for (std::size_t i = 0; i < hidden_sizes.size(); ++i)
        os << (i ? "," : "") << hidden_sizes[i];
    os << " alpha=" << format_double4(alpha) << " lr=" << format_double4(learning_rate)
       << " batch=" << batch_size << " epochs=" << max_epochs;
    return os.str();
}

StandardScaler fit_scaler(const Eigen::Ref<const Eigen::MatrixXd>& x) {
    StandardScaler s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean();
    s.stddev.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double var = (x.col(c).array() - s.mean[c]).square().sum() / n;
        const double sd = std::sqrt(var);
        s.stddev[c] = sd == 0.0 ? 1.0 : sd;
    }
    return s;
}

Eigen::MatrixXd StandardScaler::apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array();
}

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr int kNumClasses = 3;

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd shifted = logits.colwise() - logits.rowwise().maxCoeff();
    Eigen::MatrixXd e = shifted.array().exp();
    return e.array().colwise() / e.rowwise().sum().array();
}

// Activations per layer for already-standardized inputs. acts[0] is the
// input; acts.back() holds raw logits (no softmax).
std::vector<Eigen::MatrixXd> forward_scaled(const std::vector<MlpLayer>& layers,
                                            const Eigen::MatrixXd& x) {
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(layers.size() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Eigen::MatrixXd z =
            (acts.back() * layers[l].weights.transpose()).rowwise() + layers[l].bias.transpose();
        if (l + 1 < layers.size()) z = z.cwiseMax(0.0); // ReLU on hidden layers
        acts.push_back(std::move(z));
    }
    return acts;
}

double mean_cross_entropy(const Eigen::MatrixXd& logits, const Eigen::Ref<const Eigen::VectorXi>& y) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
        total += lse - logits(i, y[i]);
    }
    return total / static_cast<double>(logits.rows());
}

double weight_penalty(const std::vector<MlpLayer>& layers, double alpha) {
    double sq = 0.0;
    for (const auto& l : layers) sq += l.weights.squaredNorm();
    return 0.5 * alpha * sq;
}

// Backprop through softmax cross-entropy + ReLU stack. Inputs already
// standardized.
Gradients gradient_scaled(const std::vector<MlpLayer>& layers, const Eigen::MatrixXd& x,
                          const Eigen::Ref<const Eigen::VectorXi>& y, double alpha) {
    const auto acts = forward_scaled(layers, x);
    const Eigen::Index m = x.rows();

    Gradients g;
    g.weights.resize(layers.size());
    g.bias.resize(layers.size());

    Eigen::MatrixXd delta = softmax_rows(acts.back());
    for (Eigen::Index i = 0; i < m; ++i) delta(i, y[i]) -= 1.0;
    delta /= static_cast<double>(m);

    for (std::size_t l = layers.size(); l-- > 0;) {
        g.weights[l] = delta.transpose() * acts[l] + alpha * layers[l].weights;
        g.bias[l] = delta.colwise().sum();
        if (l > 0) {
            delta = delta * layers[l].weights;
            // acts[l] holds the post-ReLU hidden activations; the derivative
            // gate is activation > 0.
            delta = delta.array() * (acts[l].array() > 0.0).cast<double>();
        }
    }
    return g;
}

void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& x, const char* what) {
    if (!x.allFinite()) throw NumericError(std::string("non-finite value in ") + what);
}

std::vector<MlpLayer> init_layers(const std::vector<Eigen::Index>& dims, std::mt19937_64& rng) {
    std::vector<MlpLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        MlpLayer layer;
        layer.weights.resize(dims[l + 1], dims[l]);
        layer.bias = Eigen::VectorXd::Zero(dims[l + 1]);
        const double r = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        std::uniform_real_distribution<double> dist(-r, r);
        double* data = layer.weights.data();
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) data[i] = dist(rng);
        layers.push_back(std::move(layer));
    }
    return layers;
}

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long step = 0;

    explicit AdamState(const std::vector<MlpLayer>& layers) {
        for (const auto& l : layers) {
            mw.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
            vw.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
            mb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
            vb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
        }
    }

    void update(std::vector<MlpLayer>& layers, const Gradients& g, double lr) {
        ++step;
        const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
        for (std::size_t l = 0; l < layers.size(); ++l) {
            mw[l] = kAdamBeta1 * mw[l] + (1.0 - kAdamBeta1) * g.weights[l];
            vw[l] = kAdamBeta2 * vw[l].array() + (1.0 - kAdamBeta2) * g.weights[l].array().square();
            layers[l].weights.array() -=
                lr * (mw[l].array() / bc1) / ((vw[l].array() / bc2).sqrt() + kAdamEps);
            mb[l] = kAdamBeta1 * mb[l] + (1.0 - kAdamBeta1) * g.bias[l];
            vb[l] = kAdamBeta2 * vb[l].array() + (1.0 - kAdamBeta2) * g.bias[l].array().square();
            layers[l].bias.array() -=
                lr * (mb[l].array() / bc1) / ((vb[l].array() / bc2).sqrt() + kAdamEps);
        }
    }
};

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& idx,
                            std::size_t begin, std::size_t end) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin), x.cols());
    for (std::size_t i = begin; i < end; ++i)
        out.row(static_cast<Eigen::Index>(i - begin)) = x.row(idx[i]);
    return out;
}

Eigen::VectorXi gather_targets(const Eigen::VectorXi& y, const std::vector<Eigen::Index>& idx,
                               std::size_t begin, std::size_t end) {
    Eigen::VectorXi out(static_cast<Eigen::Index>(end - begin));
    for (std::size_t i = begin; i < end; ++i)
        out[static_cast<Eigen::Index>(i - begin)] = y[idx[i]];
    return out;
}

} // namespace

MlpModel fit(const TrainingMatrix& data, const MlpHyperparams& hp) {
    const Eigen::Index n = data.x.rows();
    if (n == 0) throw DataError("fit requires a nonempty training matrix");
    check_finite(data.x, "training features");
    std::set<int> classes_present(data.y.begin(), data.y.end());
    if (classes_present.size() < 2)
        throw DataError("fit requires at least two target classes, got " +
                        std::to_string(classes_present.size()));
    for (int c : classes_present)
        if (c < 0 || c >= kNumClasses)
            throw DataError("target ordinal out of range: " + std::to_string(c));
    if (hp.hidden_sizes.empty()) throw DataError("at least one hidden layer is required");
    for (int h : hp.hidden_sizes)
        if (h <= 0) throw DataError("hidden layer sizes must be positive");
    if (hp.learning_rate <= 0 || hp.alpha < 0 || hp.batch_size <= 0 || hp.max_epochs <= 0)
        throw DataError("invalid hyperparameters: " + hp.describe());

    MlpModel model;
    model.hyperparams = hp;
    model.column_names = data.column_names;
    model.feature_group = data.group_name;
    model.pair_mode = std::string(pair_mode_name(data.mode));
    model.scaler = fit_scaler(data.x);

    const Eigen::MatrixXd xs = model.scaler.apply(data.x);

    std::mt19937_64 rng(hp.seed);
    std::vector<Eigen::Index> dims;
    dims.push_back(xs.cols());
    for (int h : hp.hidden_sizes) dims.push_back(h);
    dims.push_back(kNumClasses);
    model.layers = init_layers(dims, rng);

    // Optional validation split for early stopping. Falls back to plain
    // training when the split would be degenerate.
    std::vector<Eigen::Index> train_idx(static_cast<std::size_t>(n));
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::vector<Eigen::Index> val_idx;
    if (hp.early_stop) {
        const auto n_val = static_cast<std::size_t>(
            static_cast<double>(n) * hp.early_stop->validation_fraction);
        if (n_val >= 1 && n_val < static_cast<std::size_t>(n)) {
            std::shuffle(train_idx.begin(), train_idx.end(), rng);
            val_idx.assign(train_idx.end() - static_cast<std::ptrdiff_t>(n_val), train_idx.end());
            train_idx.resize(train_idx.size() - n_val);
            std::set<int> train_classes;
            for (Eigen::Index i : train_idx) train_classes.insert(data.y[i]);
            if (train_classes.size() < 2) {
                train_idx.resize(static_cast<std::size_t>(n));
                std::iota(train_idx.begin(), train_idx.end(), 0);
                val_idx.clear();
            }
        }
    }

    AdamState adam(model.layers);
    std::vector<MlpLayer> best_layers;
    double best_val = std::numeric_limits<double>::infinity();
    int no_improve = 0;
    const std::size_t batch = static_cast<std::size_t>(hp.batch_size);

    for (int epoch = 0; epoch < hp.max_epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        for (std::size_t b = 0; b < train_idx.size(); b += batch) {
            const std::size_t e = std::min(b + batch, train_idx.size());
            const Eigen::MatrixXd bx = gather_rows(xs, train_idx, b, e);
            const Eigen::VectorXi by = gather_targets(data.y, train_idx, b, e);
            const Gradients g = gradient_scaled(model.layers, bx, by, hp.alpha);
            if (hp.optimizer == Optimizer::Adam) {
                adam.update(model.layers, g, hp.learning_rate);
            } else {
                for (std::size_t l = 0; l < model.layers.size(); ++l) {
                    model.layers[l].weights -= hp.learning_rate * g.weights[l];
                    model.layers[l].bias -= hp.learning_rate * g.bias[l];
                }
            }
        }

        const Eigen::MatrixXd tx = gather_rows(xs, train_idx, 0, train_idx.size());
        const Eigen::VectorXi ty = gather_targets(data.y, train_idx, 0, train_idx.size());
        model.epoch_losses.push_back(mean_cross_entropy(forward_scaled(model.layers, tx).back(), ty) +
                                     weight_penalty(model.layers, hp.alpha));

        if (!val_idx.empty()) {
            const Eigen::MatrixXd vx = gather_rows(xs, val_idx, 0, val_idx.size());
            const Eigen::VectorXi vy = gather_targets(data.y, val_idx, 0, val_idx.size());
            const double val_ce = mean_cross_entropy(forward_scaled(model.layers, vx).back(), vy);
            if (val_ce < best_val) {
                best_val = val_ce;
                best_layers = model.layers;
                no_improve = 0;
            } else if (++no_improve >= hp.early_stop->patience) {
                break;
            }
        }
    }
    if (!val_idx.empty() && !best_layers.empty()) model.layers = std::move(best_layers);
    return model;
}

Eigen::MatrixXd predict_proba(const MlpModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& rows) {
    if (rows.cols() != model.input_dim())
        throw DataError("predict_proba: expected " + std::to_string(model.input_dim()) +
                        " columns, got " + std::to_string(rows.cols()));
    check_finite(rows, "prediction features");
    const Eigen::MatrixXd xs = model.scaler.apply(rows);
    return softmax_rows(forward_scaled(model.layers, xs).back());
}

double loss(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows,
            const Eigen::Ref<const Eigen::VectorXi>& targets) {
    if (rows.rows() == 0) throw DataError("loss requires a nonempty batch");
    const Eigen::MatrixXd xs = model.scaler.apply(rows);
    return mean_cross_entropy(forward_scaled(model.layers, xs).back(), targets) +
           weight_penalty(model.layers, model.hyperparams.alpha);
}

Gradients loss_gradient(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                        const Eigen::Ref<const Eigen::VectorXi>& targets) {
    if (rows.rows() == 0) throw DataError("loss_gradient requires a nonempty batch");
    const Eigen::MatrixXd xs = model.scaler.apply(rows);
    return gradient_scaled(model.layers, xs, targets, model.hyperparams.alpha);
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = a[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const auto nr = static_cast<Eigen::Index>(rows.size());
    if (nr == 0) throw DataError("model blob: empty weight matrix");
    const auto nc = static_cast<Eigen::Index>(rows[0].size());
    Eigen::MatrixXd m(nr, nc);
    for (Eigen::Index r = 0; r < nr; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != nc)
            throw DataError("model blob: ragged weight matrix");
        for (Eigen::Index c = 0; c < nc; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

constexpr int kModelFormatVersion = 1;

} // namespace

std::string serialize(const MlpModel& model) {
    json j;
    j["format"] = "adprog-mlp";
    j["version"] = kModelFormatVersion;
    j["feature_group"] = model.feature_group;
    j["mode"] = model.pair_mode;
    j["columns"] = model.column_names;
    json classes = json::array();
    for (Diagnosis d : model.classes) classes.push_back(std::string(diagnosis_name(d)));
    j["classes"] = std::move(classes);
    j["scaler"] = {{"mean", vector_to_json(model.scaler.mean)},
                   {"stddev", vector_to_json(model.scaler.stddev)}};
    const auto& hp = model.hyperparams;
    json hpj = {{"hidden_sizes", hp.hidden_sizes},
                {"alpha", hp.alpha},
                {"learning_rate", hp.learning_rate},
                {"batch_size", hp.batch_size},
                {"max_epochs", hp.max_epochs},
                {"seed", hp.seed},
                {"optimizer", hp.optimizer == Optimizer::Adam ? "adam" : "sgd"}};
    if (hp.early_stop)
        hpj["early_stop"] = {{"validation_fraction", hp.early_stop->validation_fraction},
                             {"patience", hp.early_stop->patience}};
    j["hyperparams"] = std::move(hpj);
    json layers = json::array();
    for (const auto& l : model.layers)
        layers.push_back({{"weights", matrix_to_json(l.weights)}, {"bias", vector_to_json(l.bias)}});
    j["layers"] = std::move(layers);
    j["epoch_losses"] = model.epoch_losses;
    return j.dump(2);
}

MlpModel deserialize(std::string_view blob) {
    json j;
    try {
        j = json::parse(blob);
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt model blob: ") + e.what());
    }
    try {
        if (j.value("format", "") != "adprog-mlp")
            throw DataError("model blob: unknown format");
        if (j.value("version", -1) != kModelFormatVersion)
            throw DataError("model blob: unsupported version " +
                            std::to_string(j.value("version", -1)));
        MlpModel model;
        model.feature_group = j.at("feature_group").get<std::string>();
        model.pair_mode = j.at("mode").get<std::string>();
        model.column_names = j.at("columns").get<std::vector<std::string>>();
        model.classes.clear();
        for (const auto& name : j.at("classes"))
            model.classes.push_back(diagnosis_from_name(name.get<std::string>()));
        model.scaler.mean = vector_from_json(j.at("scaler").at("mean"));
        model.scaler.stddev = vector_from_json(j.at("scaler").at("stddev"));
        const auto& hpj = j.at("hyperparams");
        MlpHyperparams hp;
        hp.hidden_sizes = hpj.at("hidden_sizes").get<std::vector<int>>();
        hp.alpha = hpj.at("alpha").get<double>();
        hp.learning_rate = hpj.at("learning_rate").get<double>();
        hp.batch_size = hpj.at("batch_size").get<int>();
        hp.max_epochs = hpj.at("max_epochs").get<int>();
        hp.seed = hpj.at("seed").get<std::uint64_t>();
        hp.optimizer = hpj.at("optimizer").get<std::string>() == "sgd" ? Optimizer::Sgd
                                                                       : Optimizer::Adam;
        if (hpj.contains("early_stop")) {
            EarlyStopConfig es;
            es.validation_fraction = hpj.at("early_stop").at("validation_fraction").get<double>();
            es.patience = hpj.at("early_stop").at("patience").get<int>();
            hp.early_stop = es;
        } else {
            hp.early_stop.reset();
        }
        model.hyperparams = hp;
        for (const auto& lj : j.at("layers")) {
            MlpLayer layer;
            layer.weights = matrix_from_json(lj.at("weights"));
            layer.bias = vector_from_json(lj.at("bias"));
            if (layer.bias.size() != layer.weights.rows())
                throw DataError("model blob: bias/weight dimension mismatch");
            model.layers.push_back(std::move(layer));
        }
        if (j.contains("epoch_losses"))
            model.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();

        if (model.layers.empty()) throw DataError("model blob: no layers");
        if (model.input_dim() != static_cast<Eigen::Index>(model.column_names.size()))
            throw DataError("model blob: input dimension does not match column names");
        if (model.layers.back().weights.rows() != kNumClasses)
            throw DataError("model blob: output layer must have 3 units");
        for (std::size_t l = 1; l < model.layers.size(); ++l)
            if (model.layers[l].weights.cols() != model.layers[l - 1].weights.rows())
                throw DataError("model blob: layer dimension chain broken");
        if (model.scaler.mean.size() != model.input_dim() ||
            model.scaler.stddev.size() != model.input_dim())
            throw DataError("model blob: scaler dimension mismatch");
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt model blob: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const MlpModel& model) {
    write_file(path, serialize(model));
}

MlpModel load_model(const std::filesystem::path& path) {
    return deserialize(read_file(path));
}

} // namespace adprog
