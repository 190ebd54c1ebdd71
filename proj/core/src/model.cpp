#include "moodcast/model.hpp"

#include "moodcast/csv.hpp"
#include "moodcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace moodcast::model {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t param_count(int input_dim, int hidden) {
    const auto h = static_cast<std::size_t>(hidden);
    const auto in = static_cast<std::size_t>(input_dim);
    return 4 * h * in + 4 * h * h + 4 * h + h + 1;
}

} // namespace

ModelParams ModelParams::zeros(int input_dim, int hidden) {
    ModelParams p;
    p.input_dim = input_dim;
    p.hidden = hidden;
    p.flat.assign(param_count(input_dim, hidden), 0.0);
    return p;
}

ModelParams ModelParams::init(int input_dim, int hidden, Rng& rng) {
    ModelParams p = zeros(input_dim, hidden);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (int g = 0; g < 4; ++g) {
        double* w = p.w_in(g);
        for (int k = 0; k < hidden * input_dim; ++k) w[k] = rng.uniform(-bound, bound);
        double* u = p.w_rec(g);
        for (int k = 0; k < hidden * hidden; ++k) u[k] = rng.uniform(-bound, bound);
    }
    double* wo = p.w_out();
    for (int k = 0; k < hidden; ++k) wo[k] = rng.uniform(-bound, bound);
    p.b_out() = 0.5;
    return p;
}

double* ModelParams::w_in(int gate) {
    return flat.data() + static_cast<std::size_t>(gate) * static_cast<std::size_t>(hidden * input_dim);
}
double* ModelParams::w_rec(int gate) {
    return flat.data() + 4 * static_cast<std::size_t>(hidden * input_dim) +
           static_cast<std::size_t>(gate) * static_cast<std::size_t>(hidden * hidden);
}
double* ModelParams::bias(int gate) {
    return flat.data() + 4 * static_cast<std::size_t>(hidden * input_dim) +
           4 * static_cast<std::size_t>(hidden * hidden) + static_cast<std::size_t>(gate * hidden);
}
double* ModelParams::w_out() {
    return flat.data() + 4 * static_cast<std::size_t>(hidden * input_dim) +
           4 * static_cast<std::size_t>(hidden * hidden) + 4 * static_cast<std::size_t>(hidden);
}
double& ModelParams::b_out() { return flat.back(); }

const double* ModelParams::w_in(int gate) const { return const_cast<ModelParams*>(this)->w_in(gate); }
const double* ModelParams::w_rec(int gate) const { return const_cast<ModelParams*>(this)->w_rec(gate); }
const double* ModelParams::bias(int gate) const { return const_cast<ModelParams*>(this)->bias(gate); }
const double* ModelParams::w_out() const { return const_cast<ModelParams*>(this)->w_out(); }
const double& ModelParams::b_out() const { return flat.back(); }

double forward(const ModelParams& params, std::span<const double> seq, int steps, ForwardCache* cache) {
    const int H = params.hidden;
    const int I = params.input_dim;
    if (steps < 1 || seq.size() < static_cast<std::size_t>(steps * I)) {
        throw DataError("forward: bad sequence shape");
    }
    for (int k = 0; k < steps * I; ++k) {
        if (!std::isfinite(seq[static_cast<std::size_t>(k)])) throw DataError("forward: non-finite input");
    }

    std::vector<double> h(static_cast<std::size_t>(H), 0.0);
    std::vector<double> c(static_cast<std::size_t>(H), 0.0);
    std::vector<double> a(static_cast<std::size_t>(4 * H), 0.0);

    if (cache) {
        cache->steps = steps;
        cache->x.assign(seq.begin(), seq.begin() + steps * I);
        for (auto& g : cache->gate) g.assign(static_cast<std::size_t>(steps * H), 0.0);
        cache->cell.assign(static_cast<std::size_t>(steps * H), 0.0);
        cache->cell_tanh.assign(static_cast<std::size_t>(steps * H), 0.0);
        cache->hidden_state.assign(static_cast<std::size_t>(steps * H), 0.0);
    }

    for (int t = 0; t < steps; ++t) {
        const double* x = seq.data() + static_cast<std::size_t>(t * I);
        for (int g = 0; g < 4; ++g) {
            const double* w = params.w_in(g);
            const double* u = params.w_rec(g);
            const double* b = params.bias(g);
            for (int j = 0; j < H; ++j) {
                double acc = b[j];
                const double* wr = w + static_cast<std::size_t>(j * I);
                for (int i = 0; i < I; ++i) acc += wr[i] * x[i];
                const double* ur = u + static_cast<std::size_t>(j * H);
                for (int i = 0; i < H; ++i) acc += ur[i] * h[static_cast<std::size_t>(i)];
                a[static_cast<std::size_t>(g * H + j)] = acc;
            }
        }
        for (int j = 0; j < H; ++j) {
            const double gi = sigmoid(a[static_cast<std::size_t>(kGateInput * H + j)]);
            const double gf = sigmoid(a[static_cast<std::size_t>(kGateForget * H + j)]);
            const double gg = std::tanh(a[static_cast<std::size_t>(kGateCell * H + j)]);
            const double go = sigmoid(a[static_cast<std::size_t>(kGateOutput * H + j)]);
            const auto jj = static_cast<std::size_t>(j);
            c[jj] = gf * c[jj] + gi * gg;
            const double ct = std::tanh(c[jj]);
            h[jj] = go * ct;
            if (cache) {
                const auto at = static_cast<std::size_t>(t * H + j);
                cache->gate[kGateInput][at] = gi;
                cache->gate[kGateForget][at] = gf;
                cache->gate[kGateCell][at] = gg;
                cache->gate[kGateOutput][at] = go;
                cache->cell[at] = c[jj];
                cache->cell_tanh[at] = ct;
                cache->hidden_state[at] = h[jj];
            }
        }
    }

    double pred;
    double head_pre = 0.0;
    const double* wo = params.w_out();
    if (params.relu_before_head) {
        double acc = params.b_out();
        for (int j = 0; j < H; ++j) acc += wo[j] * std::max(0.0, h[static_cast<std::size_t>(j)]);
        pred = acc;
        head_pre = acc;
    } else {
        double acc = params.b_out();
        for (int j = 0; j < H; ++j) acc += wo[j] * h[static_cast<std::size_t>(j)];
        head_pre = acc;
        pred = std::max(0.0, acc);
    }
    if (cache) {
        cache->head_pre = head_pre;
        cache->prediction = pred;
    }
    return pred;
}

double mse(double prediction, double target) {
    const double r = prediction - target;
    return r * r;
}

std::vector<double> backward(const ModelParams& params, const ForwardCache& cache, double target) {
    const int H = params.hidden;
    const int I = params.input_dim;
    const int T = cache.steps;

    ModelParams grads = ModelParams::zeros(I, H);
    grads.relu_before_head = params.relu_before_head;

    const double dpred = 2.0 * (cache.prediction - target);

    std::vector<double> dh(static_cast<std::size_t>(H), 0.0);
    std::vector<double> dc(static_cast<std::size_t>(H), 0.0);

    const double* wo = params.w_out();
    const auto last = static_cast<std::size_t>((T - 1) * H);
    if (params.relu_before_head) {
        grads.b_out() = dpred;
        double* gwo = grads.w_out();
        for (int j = 0; j < H; ++j) {
            const double hj = cache.hidden_state[last + static_cast<std::size_t>(j)];
            gwo[j] = dpred * std::max(0.0, hj);
            dh[static_cast<std::size_t>(j)] = hj > 0.0 ? dpred * wo[j] : 0.0;
        }
    } else {
        const double dz = cache.head_pre > 0.0 ? dpred : 0.0;
        grads.b_out() = dz;
        double* gwo = grads.w_out();
        for (int j = 0; j < H; ++j) {
            gwo[j] = dz * cache.hidden_state[last + static_cast<std::size_t>(j)];
            dh[static_cast<std::size_t>(j)] = dz * wo[j];
        }
    }

    std::vector<double> da(static_cast<std::size_t>(4 * H), 0.0);
    for (int t = T - 1; t >= 0; --t) {
        const auto at = static_cast<std::size_t>(t * H);
        for (int j = 0; j < H; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            const double gi = cache.gate[kGateInput][at + jj];
            const double gf = cache.gate[kGateForget][at + jj];
            const double gg = cache.gate[kGateCell][at + jj];
            const double go = cache.gate[kGateOutput][at + jj];
            const double ct = cache.cell_tanh[at + jj];
            const double c_prev =
                t > 0 ? cache.cell[at - static_cast<std::size_t>(H) + jj] : 0.0;

            const double do_ = dh[jj] * ct;
            dc[jj] += dh[jj] * go * (1.0 - ct * ct);

            const double di = dc[jj] * gg;
            const double dg = dc[jj] * gi;
            const double df = dc[jj] * c_prev;

            da[static_cast<std::size_t>(kGateInput * H + j)] = di * gi * (1.0 - gi);
            da[static_cast<std::size_t>(kGateForget * H + j)] = df * gf * (1.0 - gf);
            da[static_cast<std::size_t>(kGateCell * H + j)] = dg * (1.0 - gg * gg);
            da[static_cast<std::size_t>(kGateOutput * H + j)] = do_ * go * (1.0 - go);

            dc[jj] *= gf; // becomes dc_prev
        }

        const double* x = cache.x.data() + static_cast<std::size_t>(t * I);
        const double* h_prev = t > 0 ? cache.hidden_state.data() + static_cast<std::size_t>((t - 1) * H) : nullptr;

        std::fill(dh.begin(), dh.end(), 0.0);
        for (int g = 0; g < 4; ++g) {
            double* gw = grads.w_in(g);
            double* gu = grads.w_rec(g);
            double* gb = grads.bias(g);
            const double* u = params.w_rec(g);
            for (int j = 0; j < H; ++j) {
                const double d = da[static_cast<std::size_t>(g * H + j)];
                double* gwr = gw + static_cast<std::size_t>(j * I);
                for (int i = 0; i < I; ++i) gwr[i] += d * x[i];
                if (h_prev) {
                    double* gur = gu + static_cast<std::size_t>(j * H);
                    for (int i = 0; i < H; ++i) gur[i] += d * h_prev[i];
                }
                gb[j] += d;
                const double* ur = u + static_cast<std::size_t>(j * H);
                for (int i = 0; i < H; ++i) dh[static_cast<std::size_t>(i)] += ur[i] * d;
            }
        }
    }

    return std::move(grads.flat);
}

AdamState AdamState::make(std::size_t n_params, double lr) {
    AdamState s;
    s.lr = lr;
    s.m.assign(n_params, 0.0);
    s.v.assign(n_params, 0.0);
    return s;
}

void adam_step(ModelParams& params, std::span<const double> grads, AdamState& state) {
    if (grads.size() != params.flat.size() || state.m.size() != params.flat.size()) {
        throw DataError("adam_step: shape mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.flat.size(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params.flat[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

namespace {

struct FlatSample {
    std::vector<double> seq;
    int steps = 0;
    double target = 0.0;
};

FlatSample flatten(const dataset::Sample& s, int input_dim) {
    FlatSample f;
    f.steps = static_cast<int>(s.seq.size());
    f.target = s.target;
    f.seq.reserve(s.seq.size() * static_cast<std::size_t>(input_dim));
    for (const auto& day : s.seq) {
        for (int i = 0; i < input_dim; ++i) f.seq.push_back(day.values[static_cast<std::size_t>(i)]);
    }
    return f;
}

} // namespace

TrainResult train(std::span<const dataset::Sample> samples, const TrainConfig& config) {
    if (samples.empty()) throw DataError("train: no samples");
    if (config.epochs < 1) throw DataError("train: epochs must be >= 1");

    const int input_dim = features::kFeatureCount;
    std::vector<FlatSample> data;
    data.reserve(samples.size());
    for (const auto& s : samples) data.push_back(flatten(s, input_dim));

    Rng rng = Rng::derive(config.seed, {0x747261696eULL});
    ModelParams params = ModelParams::init(input_dim, config.hidden, rng);
    params.relu_before_head = config.relu_before_head;
    AdamState adam = AdamState::make(params.size(), config.lr);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));

    const auto batch = static_cast<std::size_t>(std::max(1, config.batch_size));
    std::vector<double> grad_acc(params.size(), 0.0);
    ForwardCache cache;

    double best_loss = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t at = 0; at < order.size(); at += batch) {
            const std::size_t n = std::min(batch, order.size() - at);
            std::fill(grad_acc.begin(), grad_acc.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                const FlatSample& s = data[order[at + b]];
                const double pred = forward(params, s.seq, s.steps, &cache);
                batch_loss += mse(pred, s.target);
                const auto g = backward(params, cache, s.target);
                for (std::size_t k = 0; k < grad_acc.size(); ++k) grad_acc[k] += g[k];
            }
            const double scale = 1.0 / static_cast<double>(n);
            for (auto& g : grad_acc) g *= scale;
            batch_loss *= scale;
            if (!std::isfinite(batch_loss)) {
                throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch + 1));
            }
            epoch_loss += batch_loss * static_cast<double>(n);
            adam_step(params, grad_acc, adam);
        }
        epoch_loss /= static_cast<double>(data.size());
        result.epoch_loss.push_back(epoch_loss);

        if (config.patience) {
            if (epoch_loss < best_loss - 1e-12) {
                best_loss = epoch_loss;
                stale_epochs = 0;
            } else if (++stale_epochs >= *config.patience) {
                break;
            }
        }
    }

    result.params = std::move(params);
    return result;
}

double predict(const ModelParams& params, const dataset::Sample& sample) {
    const FlatSample f = flatten(sample, params.input_dim);
    return forward(params, f.seq, f.steps, nullptr);
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const TrainConfig& config) {
    std::ofstream out(path);
    if (!out.is_open()) throw DataError("cannot open for writing: " + path.string());
    out << "lstm_regressor 1\n";
    out << "input_dim " << params.input_dim << "\nhidden " << params.hidden << "\nrelu_before_head "
        << (params.relu_before_head ? 1 : 0) << '\n';
    out << "epochs " << config.epochs << "\nbatch_size " << config.batch_size << "\nlr "
        << csv::format_double(config.lr) << "\nseed " << config.seed << "\nprefix_augmentation "
        << (config.prefix_augmentation ? 1 : 0) << '\n';
    out << "params " << params.flat.size() << '\n';
    for (double v : params.flat) out << csv::format_double(v) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw DataError("cannot open " + path.string());
    std::string word;
    int version = 0;
    in >> word >> version;
    if (word != "lstm_regressor" || version != 1) throw DataError("bad checkpoint header");

    Checkpoint cp;
    int relu = 0;
    int prefix = 0;
    std::size_t n = 0;
    in >> word >> cp.params.input_dim; // input_dim
    in >> word >> cp.params.hidden;    // hidden
    in >> word >> relu;                // relu_before_head
    in >> word >> cp.config.epochs;
    in >> word >> cp.config.batch_size;
    in >> word >> cp.config.lr;
    in >> word >> cp.config.seed;
    in >> word >> prefix;
    in >> word >> n; // params
    if (!in || word != "params") throw DataError("bad checkpoint body");
    cp.params.relu_before_head = relu != 0;
    cp.config.relu_before_head = relu != 0;
    cp.config.prefix_augmentation = prefix != 0;
    cp.config.hidden = cp.params.hidden;
    cp.params.flat.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        in >> cp.params.flat[i];
        if (!in) throw DataError("truncated checkpoint");
    }
    if (cp.params.flat.size() != param_count(cp.params.input_dim, cp.params.hidden)) {
        throw DataError("checkpoint shape mismatch");
    }
    return cp;
}

void write_loss_trace(const std::filesystem::path& path, std::span<const double> epoch_loss) {
    csv::TableWriter w(path, {"epoch", "train_loss"});
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
        w.row({std::to_string(i + 1), csv::format_double(epoch_loss[i])});
    }
}

} // namespace moodcast::model
