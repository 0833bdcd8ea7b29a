#ifndef ADPROG_MODEL_HPP
#define ADPROG_MODEL_HPP

#include "adprog/allpairs.hpp"
#include "adprog/cohort.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace adprog {

struct EarlyStopConfig {
    double validation_fraction = 0.1;
    int patience = 15;
};

enum class Optimizer { Adam, Sgd };

struct MlpHyperparams {
    std::vector<int> hidden_sizes{100};
    double alpha = 1e-4;        // L2 penalty on weights
    double learning_rate = 1e-3;
    int batch_size = 64;
    int max_epochs = 300;
    std::uint64_t seed = 0;
    std::optional<EarlyStopConfig> early_stop = EarlyStopConfig{};
    Optimizer optimizer = Optimizer::Adam;

    std::string describe() const;
};

// Per-column standardization. Constant columns keep stddev 1 so the
// transform is always well defined.
struct StandardScaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;

    Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

StandardScaler fit_scaler(const Eigen::Ref<const Eigen::MatrixXd>& x);

struct MlpLayer {
    Eigen::MatrixXd weights; // out x in
    Eigen::VectorXd bias;    // out
};

// ReLU hidden layers, softmax output over the three diagnosis classes.
struct MlpModel {
    std::vector<MlpLayer> layers;
    StandardScaler scaler;
    MlpHyperparams hyperparams;
    std::vector<Diagnosis> classes{Diagnosis::NL, Diagnosis::MCI, Diagnosis::Dementia};
    std::vector<std::string> column_names;
    std::string feature_group; // metadata for CLI wiring
    std::string pair_mode;     // "pairs" / "triplets"
    std::vector<double> epoch_losses; // regularized training loss per epoch

    Eigen::Index input_dim() const {
        return layers.empty() ? 0 : layers.front().weights.cols();
    }
};

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> bias;
};

// Trains with mini-batch Adam (or plain SGD) on standardized features.
// Objective: mean softmax cross-entropy + alpha * (sum of squared weights)/2.
// Deterministic for a given seed. Requires a nonempty matrix with >= 2
// target classes and finite values.
MlpModel fit(const TrainingMatrix& data, const MlpHyperparams& hp);

// One probability triple per row (class order NL, MCI, DEMENTIA); each row
// sums to 1 within 1e-9. Rows are raw feature rows; the model's scaler is
// applied internally.
Eigen::MatrixXd predict_proba(const MlpModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& rows);

// Regularized loss and its analytic gradients on one batch of raw rows.
double loss(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows,
            const Eigen::Ref<const Eigen::VectorXi>& targets);
Gradients loss_gradient(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                        const Eigen::Ref<const Eigen::VectorXi>& targets);

// JSON blob with embedded format version; round-trips predictions
// bit-exactly.
std::string serialize(const MlpModel& model);
MlpModel deserialize(std::string_view blob);

void save_model(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_model(const std::filesystem::path& path);

} // namespace adprog

#endif
