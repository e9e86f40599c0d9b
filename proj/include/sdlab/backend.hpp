#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdlab/latent.hpp"
#include "sdlab/rng.hpp"
#include "sdlab/schedule.hpp"

namespace sdlab {

// Conditioning token for a score model: either the unconditional token or a
// discrete label id in [0, num_labels).
class Condition {
public:
    static Condition null() { return Condition(-1); }
    static Condition label(int id);

    bool is_null() const { return id_ < 0; }
    int label_id() const;  // throws ConditionError on the null token

    bool operator==(const Condition& other) const { return id_ == other.id_; }

private:
    explicit Condition(int id) : id_(id) {}
    int id_;
};

// A conditional noise predictor eps_hat(z_t, cond, t) together with the
// vector-Jacobian product of that prediction with respect to z_t. Everything
// downstream (guidance, posterior means, refinement, distillation) talks to
// this interface only.
class ScoreBackend {
public:
    virtual ~ScoreBackend() = default;

    virtual const std::vector<int>& latent_shape() const = 0;
    virtual int num_labels() const = 0;

    // Predicted noise at the diffused latent. t in [0,1].
    virtual Latent score(const Latent& noisy, const Condition& cond, double t) const = 0;

    // cotangent^T d(score)/d(noisy): pull the cotangent u back through the
    // noise prediction. Same shape as the latent.
    virtual Latent score_vjp(const Latent& noisy, const Condition& cond, double t,
                             const Latent& cotangent) const = 0;
};

// ---------------------------------------------------------------------------
// Analytic mixture backend

struct GmmComponent {
    double weight = 1.0;  // prior weight; the constructor normalises the set
    Latent mean;
    double sigma = 1.0;  // isotropic component std dev, > 0
};

// Exact conditional score model for a Gaussian-mixture data distribution.
// A label selects a subset of components (weights renormalised within the
// subset); the null condition uses the full mixture. Under the forward process
// each component's diffused marginal is
//   N(sqrt(alpha) * mean, (alpha * sigma^2 + 1 - alpha) * I)
// and the noise prediction is -sqrt(1 - alpha) times the mixture score of that
// diffused density, which this class evaluates in closed form.
class GaussianMixtureBackend final : public ScoreBackend {
public:
    GaussianMixtureBackend(std::vector<GmmComponent> components,
                           std::vector<std::vector<int>> label_components,
                           NoiseSchedule schedule);

    const std::vector<int>& latent_shape() const override { return shape_; }
    int num_labels() const override { return static_cast<int>(label_components_.size()); }

    Latent score(const Latent& noisy, const Condition& cond, double t) const override;
    Latent score_vjp(const Latent& noisy, const Condition& cond, double t,
                     const Latent& cotangent) const override;

    // log of the diffused mixture density at z_t under the given condition;
    // the score above equals -sqrt(1-alpha) times its gradient.
    double log_density(const Latent& noisy, const Condition& cond, double t) const;

    const std::vector<GmmComponent>& components() const { return components_; }
    const std::vector<std::vector<int>>& label_components() const { return label_components_; }
    const NoiseSchedule& schedule() const { return schedule_; }

private:
    const std::vector<int>& subset_for(const Condition& cond) const;

    std::vector<GmmComponent> components_;
    std::vector<std::vector<int>> label_components_;
    std::vector<int> all_components_;
    NoiseSchedule schedule_;
    std::vector<int> shape_;
};

// ---------------------------------------------------------------------------
// Trainable MLP backend

struct DenseLayer {
    int in = 0;
    int out = 0;
    std::vector<double> weight;  // row-major, out x in
    std::vector<double> bias;    // out
};

struct TrainSample {
    Latent clean;
    int label = 0;
};

struct TrainConfig {
    int epochs = 200;
    double learning_rate = 1e-3;
    double cond_drop_prob = 0.1;  // chance of training a sample unconditionally
};

// Small dense tanh network predicting the injected noise from
// [z_t | sinusoidal t embedding | one-hot condition (null slot last)].
// The Jacobian-transpose product is hand-written reverse mode over the same
// forward pass the prediction uses.
class MlpDenoiserBackend final : public ScoreBackend {
public:
    // Fresh network with the given hidden widths; weights ~ N(0, 1/fan_in).
    static MlpDenoiserBackend init(std::vector<int> latent_shape, int num_labels,
                                   const std::vector<int>& hidden_widths, Rng& rng);

    const std::vector<int>& latent_shape() const override { return shape_; }
    int num_labels() const override { return num_labels_; }

    Latent score(const Latent& noisy, const Condition& cond, double t) const override;
    Latent score_vjp(const Latent& noisy, const Condition& cond, double t,
                     const Latent& cotangent) const override;

    nlohmann::ordered_json to_json() const;
    static MlpDenoiserBackend from_json(const nlohmann::json& doc);

    const std::vector<DenseLayer>& layers() const { return layers_; }

    // One pass of per-sample stochastic gradient descent on
    // || eps_hat(z_t, cond, t) - eps ||^2 with t ~ U(0,1), eps ~ N(0,I) and
    // conditions dropped to null with the configured probability. Returns the
    // mean sample loss per epoch. epochs = 0 leaves the weights untouched.
    std::vector<double> train(const std::vector<TrainSample>& dataset,
                              const NoiseSchedule& schedule, Rng& rng, const TrainConfig& config);

private:
    MlpDenoiserBackend() = default;

    int input_width() const;
    std::vector<double> assemble_input(const Latent& noisy, const Condition& cond, double t) const;
    // Forward pass keeping post-activation values per layer for reverse mode.
    std::vector<std::vector<double>> forward_activations(const std::vector<double>& input) const;

    std::vector<int> shape_;
    int num_labels_ = 0;
    std::vector<DenseLayer> layers_;
};

// Frequencies of the 8-channel sinusoidal time embedding (geometric ladder).
extern const double kTimeFrequencies[8];

}  // namespace sdlab
