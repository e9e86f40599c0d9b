#include <cmath>
#include <string>

#include "sdlab/backend.hpp"
#include "sdlab/errors.hpp"

namespace sdlab {

Condition Condition::label(int id) {
    if (id < 0) throw ConditionError("label id must be non-negative");
    return Condition(id);
}

int Condition::label_id() const {
    if (is_null()) throw ConditionError("null condition has no label id");
    return id_;
}

GaussianMixtureBackend::GaussianMixtureBackend(std::vector<GmmComponent> components,
                                               std::vector<std::vector<int>> label_components,
                                               NoiseSchedule schedule)
    : components_(std::move(components)),
      label_components_(std::move(label_components)),
      schedule_(schedule) {
    if (components_.empty()) throw DataError("mixture needs at least one component");
    shape_ = components_[0].mean.shape;
    double total = 0.0;
    for (const auto& c : components_) {
        if (c.mean.shape != shape_) throw ShapeError("mixture component means must share one shape");
        if (!(c.sigma > 0.0)) throw DomainError("component sigma must be positive");
        if (!(c.weight > 0.0)) throw DomainError("component weight must be positive");
        total += c.weight;
    }
    for (auto& c : components_) c.weight /= total;
    if (label_components_.empty()) throw DataError("mixture needs at least one label");
    for (const auto& subset : label_components_) {
        if (subset.empty()) throw DataError("every label must select at least one component");
        for (int idx : subset)
            if (idx < 0 || idx >= static_cast<int>(components_.size()))
                throw DataError("label references component " + std::to_string(idx) +
                                " which does not exist");
    }
    all_components_.resize(components_.size());
    for (std::size_t i = 0; i < components_.size(); ++i) all_components_[i] = static_cast<int>(i);
}

const std::vector<int>& GaussianMixtureBackend::subset_for(const Condition& cond) const {
    if (cond.is_null()) return all_components_;
    int id = cond.label_id();
    if (id >= num_labels())
        throw ConditionError("label " + std::to_string(id) + " out of range (have " +
                             std::to_string(num_labels()) + " labels)");
    return label_components_[id];
}

namespace {

// Shared per-call quantities: responsibilities of the diffused components at
// z_t plus the per-component "pull" vectors g_k = (sqrt(a)*mu_k - z) / s2_k,
// which are the gradients of the component log densities.
struct MixtureEval {
    double alpha = 0.0;
    std::vector<double> gamma;               // responsibilities, one per subset entry
    std::vector<double> inv_s2;              // 1 / (alpha*sigma^2 + 1 - alpha)
    std::vector<std::vector<double>> pulls;  // g_k per subset entry
    double log_norm = 0.0;                   // logsumexp of weighted component logs
    double log_weight_total = 0.0;           // log of subset prior mass (pre-renormalisation)
};

MixtureEval evaluate(const std::vector<GmmComponent>& components, const std::vector<int>& subset,
                     const Latent& noisy, double alpha) {
    const std::size_t dims = noisy.size();
    MixtureEval ev;
    ev.alpha = alpha;
    double root_alpha = std::sqrt(alpha);
    std::vector<double> log_terms(subset.size());
    ev.inv_s2.resize(subset.size());
    ev.pulls.assign(subset.size(), std::vector<double>(dims));
    double weight_total = 0.0;
    for (std::size_t j = 0; j < subset.size(); ++j) {
        const GmmComponent& c = components[subset[j]];
        weight_total += c.weight;
        double s2 = alpha * c.sigma * c.sigma + (1.0 - alpha);
        ev.inv_s2[j] = 1.0 / s2;
        double q = 0.0;
        for (std::size_t i = 0; i < dims; ++i) {
            double diff = root_alpha * c.mean.data[i] - noisy.data[i];
            ev.pulls[j][i] = diff / s2;
            q += diff * diff;
        }
        log_terms[j] = std::log(c.weight) - 0.5 * static_cast<double>(dims) * std::log(6.283185307179586 * s2) -
                       0.5 * q / s2;
    }
    double peak = log_terms[0];
    for (double v : log_terms) peak = std::max(peak, v);
    double sum = 0.0;
    for (double v : log_terms) sum += std::exp(v - peak);
    ev.log_norm = peak + std::log(sum);
    ev.log_weight_total = std::log(weight_total);
    ev.gamma.resize(subset.size());
    for (std::size_t j = 0; j < subset.size(); ++j)
        ev.gamma[j] = std::exp(log_terms[j] - ev.log_norm);
    return ev;
}

}  // namespace

Latent GaussianMixtureBackend::score(const Latent& noisy, const Condition& cond, double t) const {
    if (noisy.shape != shape_) throw ShapeError("score: latent shape does not match backend");
    double alpha = alpha_at(schedule_, t);
    MixtureEval ev = evaluate(components_, subset_for(cond), noisy, alpha);
    Latent out = Latent::zeros(shape_);
    for (std::size_t j = 0; j < ev.gamma.size(); ++j)
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += ev.gamma[j] * ev.pulls[j][i];
    // eps_hat = -sqrt(1 - alpha) * grad log p_t
    double factor = -std::sqrt(1.0 - alpha);
    for (double& v : out.data) v *= factor;
    return out;
}

Latent GaussianMixtureBackend::score_vjp(const Latent& noisy, const Condition& cond, double t,
                                         const Latent& cotangent) const {
    if (noisy.shape != shape_) throw ShapeError("score_vjp: latent shape does not match backend");
    require_same_shape(noisy, cotangent, "score_vjp");
    double alpha = alpha_at(schedule_, t);
    MixtureEval ev = evaluate(components_, subset_for(cond), noisy, alpha);
    const std::size_t dims = noisy.size();

    // Hessian of the mixture log density applied to u:
    //   H u = -(sum_k gamma_k / s2_k) u + sum_k gamma_k g_k (g_k . u) - s (s . u)
    // with s the mixture score. The Hessian is symmetric, so the transpose in
    // the vjp costs nothing.
    std::vector<double> mix_score(dims, 0.0);
    double diag = 0.0;
    for (std::size_t j = 0; j < ev.gamma.size(); ++j) {
        diag += ev.gamma[j] * ev.inv_s2[j];
        for (std::size_t i = 0; i < dims; ++i) mix_score[i] += ev.gamma[j] * ev.pulls[j][i];
    }
    Latent out = Latent::zeros(shape_);
    for (std::size_t i = 0; i < dims; ++i) out.data[i] = -diag * cotangent.data[i];
    for (std::size_t j = 0; j < ev.gamma.size(); ++j) {
        double proj = 0.0;
        for (std::size_t i = 0; i < dims; ++i) proj += ev.pulls[j][i] * cotangent.data[i];
        proj *= ev.gamma[j];
        for (std::size_t i = 0; i < dims; ++i) out.data[i] += proj * ev.pulls[j][i];
    }
    double score_proj = 0.0;
    for (std::size_t i = 0; i < dims; ++i) score_proj += mix_score[i] * cotangent.data[i];
    for (std::size_t i = 0; i < dims; ++i) out.data[i] -= score_proj * mix_score[i];

    double factor = -std::sqrt(1.0 - alpha);
    for (double& v : out.data) v *= factor;
    return out;
}

double GaussianMixtureBackend::log_density(const Latent& noisy, const Condition& cond,
                                           double t) const {
    if (noisy.shape != shape_) throw ShapeError("log_density: latent shape does not match backend");
    double alpha = alpha_at(schedule_, t);
    MixtureEval ev = evaluate(components_, subset_for(cond), noisy, alpha);
    // Renormalise the subset's prior mass so the density integrates to one.
    return ev.log_norm - ev.log_weight_total;
}

}  // namespace sdlab
