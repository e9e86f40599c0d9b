#include <cmath>
#include <numeric>
#include <string>

#include "sdlab/backend.hpp"
#include "sdlab/diffusion.hpp"
#include "sdlab/errors.hpp"

namespace sdlab {

// Geometric ladder pi * 2^j, j = 0..7. Low channels separate coarse time
// scales, high ones resolve fine ones; fixed here so serialized nets stay
// compatible with future builds.
const double kTimeFrequencies[8] = {
    3.141592653589793,  6.283185307179586, 12.566370614359172, 25.132741228718345,
    50.26548245743669,  100.53096491487338, 201.06192982974676, 402.1238596594935,
};

int MlpDenoiserBackend::input_width() const {
    return static_cast<int>(shape_size(shape_)) + 16 + num_labels_ + 1;
}

MlpDenoiserBackend MlpDenoiserBackend::init(std::vector<int> latent_shape, int num_labels,
                                            const std::vector<int>& hidden_widths, Rng& rng) {
    if (num_labels < 1) throw DataError("denoiser needs at least one label");
    if (hidden_widths.empty()) throw DataError("denoiser needs at least one hidden layer");
    MlpDenoiserBackend net;
    net.shape_ = std::move(latent_shape);
    net.num_labels_ = num_labels;
    int out_width = static_cast<int>(shape_size(net.shape_));

    std::vector<int> widths;
    widths.push_back(net.input_width());
    for (int w : hidden_widths) {
        if (w < 1) throw DataError("hidden width must be positive");
        widths.push_back(w);
    }
    widths.push_back(out_width);

    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        DenseLayer layer;
        layer.in = widths[l];
        layer.out = widths[l + 1];
        layer.weight.resize(static_cast<std::size_t>(layer.in) * layer.out);
        layer.bias.assign(layer.out, 0.0);
        double scale = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (double& w : layer.weight) w = scale * rng.next_gaussian();
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

std::vector<double> MlpDenoiserBackend::assemble_input(const Latent& noisy, const Condition& cond,
                                                       double t) const {
    if (noisy.shape != shape_) throw ShapeError("denoiser: latent shape does not match network");
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("diffusion time must lie in [0, 1]");
    std::vector<double> input;
    input.reserve(input_width());
    input.insert(input.end(), noisy.data.begin(), noisy.data.end());
    for (double f : kTimeFrequencies) {
        input.push_back(std::sin(f * t));
        input.push_back(std::cos(f * t));
    }
    std::vector<double> onehot(num_labels_ + 1, 0.0);
    if (cond.is_null()) {
        onehot[num_labels_] = 1.0;
    } else {
        int id = cond.label_id();
        if (id >= num_labels_)
            throw ConditionError("label " + std::to_string(id) + " out of range (have " +
                                 std::to_string(num_labels_) + " labels)");
        onehot[id] = 1.0;
    }
    input.insert(input.end(), onehot.begin(), onehot.end());
    return input;
}

std::vector<std::vector<double>> MlpDenoiserBackend::forward_activations(
    const std::vector<double>& input) const {
    std::vector<std::vector<double>> acts;
    acts.reserve(layers_.size() + 1);
    acts.push_back(input);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        std::vector<double> next(layer.out);
        const std::vector<double>& prev = acts.back();
        for (int r = 0; r < layer.out; ++r) {
            double acc = layer.bias[r];
            const double* row = layer.weight.data() + static_cast<std::size_t>(r) * layer.in;
            for (int c = 0; c < layer.in; ++c) acc += row[c] * prev[c];
            next[r] = acc;
        }
        if (l + 1 < layers_.size())
            for (double& v : next) v = std::tanh(v);
        acts.push_back(std::move(next));
    }
    return acts;
}

Latent MlpDenoiserBackend::score(const Latent& noisy, const Condition& cond, double t) const {
    auto acts = forward_activations(assemble_input(noisy, cond, t));
    return Latent(acts.back(), shape_);
}

Latent MlpDenoiserBackend::score_vjp(const Latent& noisy, const Condition& cond, double t,
                                     const Latent& cotangent) const {
    require_same_shape(noisy, cotangent, "score_vjp");
    auto acts = forward_activations(assemble_input(noisy, cond, t));

    // Reverse pass: delta holds dL/d(pre-activation) of the current layer.
    // Hidden activations are tanh, so tanh' = 1 - a^2 with the stored
    // post-activation value a; the output layer is linear.
    std::vector<double> delta = cotangent.data;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const DenseLayer& layer = layers_[l];
        std::vector<double> prev_grad(layer.in, 0.0);
        for (int r = 0; r < layer.out; ++r) {
            const double* row = layer.weight.data() + static_cast<std::size_t>(r) * layer.in;
            for (int c = 0; c < layer.in; ++c) prev_grad[c] += row[c] * delta[r];
        }
        if (l > 0) {
            const std::vector<double>& a = acts[l];
            for (int c = 0; c < layer.in; ++c) prev_grad[c] *= 1.0 - a[c] * a[c];
        }
        delta = std::move(prev_grad);
    }
    std::size_t dims = shape_size(shape_);
    return Latent(std::vector<double>(delta.begin(), delta.begin() + dims), shape_);
}

std::vector<double> MlpDenoiserBackend::train(const std::vector<TrainSample>& dataset,
                                              const NoiseSchedule& schedule, Rng& rng,
                                              const TrainConfig& config) {
    if (dataset.empty()) throw DataError("training dataset is empty");
    for (const auto& s : dataset) {
        if (s.clean.shape != shape_) throw ShapeError("training sample shape does not match network");
        if (s.label < 0 || s.label >= num_labels_)
            throw ConditionError("training sample label " + std::to_string(s.label) + " out of range");
    }
    if (config.epochs < 0) throw DomainError("epochs must be non-negative");
    if (!(config.learning_rate > 0.0)) throw DomainError("learning rate must be positive");
    if (!(config.cond_drop_prob >= 0.0 && config.cond_drop_prob <= 1.0))
        throw DomainError("cond_drop_prob must lie in [0, 1]");

    std::vector<double> epoch_losses;
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates over the visit order, then per sample the generator is
        // consumed as: shuffle happens up front, then time, noise, drop coin.
        for (std::size_t i = order.size(); i-- > 1;) {
            std::size_t j = rng.next_u64() % (i + 1);
            std::swap(order[i], order[j]);
        }
        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            const TrainSample& sample = dataset[idx];
            double t = rng.next_unit();
            Latent eps = sample_gaussian(rng, shape_);
            Condition cond = rng.next_unit() < config.cond_drop_prob
                                 ? Condition::null()
                                 : Condition::label(sample.label);
            Latent noisy = forward_diffuse(sample.clean, eps, t, schedule);

            auto acts = forward_activations(assemble_input(noisy, cond, t));
            const std::vector<double>& out = acts.back();
            std::vector<double> delta(out.size());
            double loss = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) {
                double r = out[i] - eps.data[i];
                loss += r * r;
                delta[i] = 2.0 * r;  // d||r||^2 / d out
            }
            loss_sum += loss;

            // Backprop with immediate SGD update; weight gradients use the
            // pre-update weights because prev_grad is computed first.
            for (std::size_t l = layers_.size(); l-- > 0;) {
                DenseLayer& layer = layers_[l];
                const std::vector<double>& a_in = acts[l];
                std::vector<double> prev_grad(layer.in, 0.0);
                for (int r = 0; r < layer.out; ++r) {
                    double* row = layer.weight.data() + static_cast<std::size_t>(r) * layer.in;
                    double d = delta[r];
                    for (int c = 0; c < layer.in; ++c) {
                        prev_grad[c] += row[c] * d;
                        row[c] -= config.learning_rate * d * a_in[c];
                    }
                    layer.bias[r] -= config.learning_rate * d;
                }
                if (l > 0)
                    for (int c = 0; c < layer.in; ++c)
                        prev_grad[c] *= 1.0 - a_in[c] * a_in[c];
                delta = std::move(prev_grad);
            }
        }
        epoch_losses.push_back(loss_sum / static_cast<double>(dataset.size()));
    }
    return epoch_losses;
}

nlohmann::ordered_json MlpDenoiserBackend::to_json() const {
    nlohmann::ordered_json doc;
    doc["schema"] = 1;
    doc["kind"] = "mlp-denoiser";
    doc["latent_shape"] = shape_;
    doc["num_labels"] = num_labels_;
    doc["activation"] = "tanh";
    doc["time_frequencies"] = std::vector<double>(std::begin(kTimeFrequencies),
                                                  std::end(kTimeFrequencies));
    doc["layers"] = nlohmann::ordered_json::array();
    for (const DenseLayer& layer : layers_) {
        nlohmann::ordered_json entry;
        entry["in"] = layer.in;
        entry["out"] = layer.out;
        entry["weight"] = layer.weight;
        entry["bias"] = layer.bias;
        doc["layers"].push_back(std::move(entry));
    }
    return doc;
}

MlpDenoiserBackend MlpDenoiserBackend::from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("schema").get<int>() != 1) throw DataError("unsupported weights schema version");
        if (doc.at("kind").get<std::string>() != "mlp-denoiser")
            throw DataError("weights document is not an mlp-denoiser");
        if (doc.at("activation").get<std::string>() != "tanh")
            throw DataError("unsupported activation in weights document");
        auto freqs = doc.at("time_frequencies").get<std::vector<double>>();
        if (freqs.size() != 8 ||
            !std::equal(freqs.begin(), freqs.end(), std::begin(kTimeFrequencies)))
            throw DataError("weights document uses an incompatible time embedding");

        MlpDenoiserBackend net;
        net.shape_ = doc.at("latent_shape").get<std::vector<int>>();
        net.num_labels_ = doc.at("num_labels").get<int>();
        if (net.num_labels_ < 1) throw DataError("weights document has no labels");
        shape_size(net.shape_);  // validate

        int expect_in = net.input_width();
        for (const auto& entry : doc.at("layers")) {
            DenseLayer layer;
            layer.in = entry.at("in").get<int>();
            layer.out = entry.at("out").get<int>();
            layer.weight = entry.at("weight").get<std::vector<double>>();
            layer.bias = entry.at("bias").get<std::vector<double>>();
            if (layer.in != expect_in) throw DataError("layer input width does not chain");
            if (layer.in < 1 || layer.out < 1) throw DataError("layer widths must be positive");
            if (layer.weight.size() != static_cast<std::size_t>(layer.in) * layer.out ||
                layer.bias.size() != static_cast<std::size_t>(layer.out))
                throw DataError("layer buffer sizes do not match declared widths");
            expect_in = layer.out;
            net.layers_.push_back(std::move(layer));
        }
        if (net.layers_.empty()) throw DataError("weights document has no layers");
        if (expect_in != static_cast<int>(shape_size(net.shape_)))
            throw DataError("final layer width does not match the latent shape");
        for (const DenseLayer& layer : net.layers_)
            for (double w : layer.weight)
                if (!std::isfinite(w)) throw DataError("weights document contains non-finite values");
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed weights document: ") + e.what());
    }
}

}  // namespace sdlab
