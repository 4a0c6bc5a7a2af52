#include "toxscreen/sae_train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "toxscreen/error.hpp"
#include "toxscreen/metrics.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/rng.hpp"
#include "toxscreen/text_io.hpp"

namespace toxscreen {
namespace {

struct AdamState {
  SaeParams<float> m;
  SaeParams<float> v;
  std::uint64_t step = 0;

  explicit AdamState(const SaeShape& s) : m(s), v(s) {}
};

void adam_update(SaeParams<float>& params, const SaeParams<float>& grads, AdamState& state, const TrainConfig& cfg,
                 double lr, std::size_t batch) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const float b1 = static_cast<float>(cfg.adam_beta1);
  const float b2 = static_cast<float>(cfg.adam_beta2);
  const float corr1 = static_cast<float>(1.0 - std::pow(cfg.adam_beta1, t));
  const float corr2 = static_cast<float>(1.0 - std::pow(cfg.adam_beta2, t));
  const float step = static_cast<float>(lr);
  const float eps = static_cast<float>(cfg.adam_epsilon);
  const float inv_batch = 1.0f / static_cast<float>(batch);
  const float decay = static_cast<float>(cfg.weight_decay);

  const auto p_layers = params.layers();
  const auto g_layers = grads.layers();
  const auto m_layers = state.m.layers();
  const auto v_layers = state.v.layers();
  auto update = [&](std::vector<float>& p, const std::vector<float>& g, std::vector<float>& m, std::vector<float>& v,
                    bool is_weight) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      float grad = g[i] * inv_batch;
      if (is_weight && decay != 0.0f) grad += decay * p[i];
      m[i] = b1 * m[i] + (1.0f - b1) * grad;
      v[i] = b2 * v[i] + (1.0f - b2) * grad * grad;
      const float m_hat = m[i] / corr1;
      const float v_hat = v[i] / corr2;
      p[i] -= step * m_hat / (std::sqrt(v_hat) + eps);
    }
  };
  for (std::size_t l = 0; l < kSaeLayerCount; ++l) {
    update(p_layers[l]->weight, g_layers[l]->weight, m_layers[l]->weight, v_layers[l]->weight, true);
    update(p_layers[l]->bias, g_layers[l]->bias, m_layers[l]->bias, v_layers[l]->bias, false);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::validation, "epochs must be at least 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) fail(ErrorKind::validation, "learning_rate must be > 0");
  if (!(plateau_factor > 0 && plateau_factor < 1)) fail(ErrorKind::validation, "plateau_factor must lie in (0, 1)");
  if (plateau_patience_epochs < 1) fail(ErrorKind::validation, "plateau_patience_epochs must be at least 1");
  if (!(sparsity_weight >= 0) || !std::isfinite(sparsity_weight)) fail(ErrorKind::validation, "sparsity_weight must be >= 0");
  if (batch_size < 1) fail(ErrorKind::validation, "batch_size must be at least 1");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1)) {
    fail(ErrorKind::validation, "Adam decay rates must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0)) fail(ErrorKind::validation, "adam_epsilon must be > 0");
  if (!(weight_decay >= 0)) fail(ErrorKind::validation, "weight_decay must be >= 0");
  if (reduction_ratio < 1 || hidden_dim < 1 || latent_dim < 1) {
    fail(ErrorKind::validation, "reduction_ratio, hidden_dim and latent_dim must be positive");
  }
}

TrainConfig TrainConfig::from(const KeyValueConfig& kv) {
  TrainConfig c;
  c.epochs = kv.get_u64("epochs", c.epochs);
  c.learning_rate = kv.get_real("learning_rate", c.learning_rate);
  c.plateau_factor = kv.get_real("plateau_factor", c.plateau_factor);
  c.plateau_patience_epochs = kv.get_u64("plateau_patience_epochs", c.plateau_patience_epochs);
  c.sparsity_weight = kv.get_real("sparsity_weight", c.sparsity_weight);
  c.batch_size = kv.get_u64("batch_size", c.batch_size);
  c.seed = kv.get_u64("seed", c.seed);
  c.adam_beta1 = kv.get_real("adam_beta1", c.adam_beta1);
  c.adam_beta2 = kv.get_real("adam_beta2", c.adam_beta2);
  c.adam_epsilon = kv.get_real("adam_epsilon", c.adam_epsilon);
  c.weight_decay = kv.get_real("weight_decay", c.weight_decay);
  c.reduction_ratio = kv.get_u64("reduction_ratio", c.reduction_ratio);
  c.hidden_dim = kv.get_u64("hidden_dim", c.hidden_dim);
  c.latent_dim = kv.get_u64("latent_dim", c.latent_dim);
  c.validate();
  return c;
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "epochs = " << epochs << "\nlearning_rate = " << format_real(learning_rate)
      << "\nplateau_factor = " << format_real(plateau_factor)
      << "\nplateau_patience_epochs = " << plateau_patience_epochs
      << "\nsparsity_weight = " << format_real(sparsity_weight) << "\nbatch_size = " << batch_size
      << "\nseed = " << seed << "\nadam_beta1 = " << format_real(adam_beta1)
      << "\nadam_beta2 = " << format_real(adam_beta2) << "\nadam_epsilon = " << format_real(adam_epsilon)
      << "\nweight_decay = " << format_real(weight_decay) << "\nreduction_ratio = " << reduction_ratio
      << "\nhidden_dim = " << hidden_dim << "\nlatent_dim = " << latent_dim << "\n";
  return out.str();
}

PlateauSchedule::PlateauSchedule(double initial_lr, double factor, std::uint64_t patience)
    : lr_(initial_lr), factor_(factor), patience_(patience), best_(std::numeric_limits<double>::infinity()) {}

bool PlateauSchedule::step(double metric) {
  if (metric < best_) {
    best_ = metric;
    bad_epochs_ = 0;
    return false;
  }
  if (++bad_epochs_ >= patience_) {
    lr_ *= factor_;
    bad_epochs_ = 0;
    return true;
  }
  return false;
}

double mean_reconstruction_mse(const SaeModel& model, const PooledSet& set) {
  const ScoreTable scores = score_pooled(model, set);
  double sum = 0;
  for (double s : scores.scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

ScoreTable score_pooled(const SaeModel& model, const PooledSet& set) {
  if (set.size() == 0) fail(ErrorKind::validation, "no slides to score");
  if (set.dim() != model.shape().input_dim) {
    fail(ErrorKind::data, "pooled vectors have dimension " + std::to_string(set.dim()) + ", model expects " +
                              std::to_string(model.shape().input_dim));
  }
  ScoreTable table{set.slide_ids, std::vector<double>(set.size())};
  parallel_for(set.size(), [&](std::size_t i) { table.scores[i] = reconstruction_score(model, set.vectors.row(i)); });
  return table;
}

TrainResult train_sae(const PooledSet& train, const PooledSet& val, const TrainConfig& cfg,
                      std::span<const Label> val_labels) {
  cfg.validate();
  if (train.size() == 0) fail(ErrorKind::validation, "training set is empty");
  if (val.size() == 0) fail(ErrorKind::validation, "validation set is empty");
  if (train.dim() != val.dim()) fail(ErrorKind::data, "training and validation vectors differ in dimension");
  if (!val_labels.empty() && val_labels.size() != val.size()) {
    fail(ErrorKind::validation, "validation labels must be parallel to the validation set");
  }

  SaeShape shape{train.dim(), cfg.reduction_ratio, cfg.hidden_dim, cfg.latent_dim};
  SaeModel current{init_params(shape, cfg.seed), 0, 0};
  AdamState adam(shape);
  SaeParams<float> grads(shape);
  SaeActivations<float> acts(shape);

  // Batch order comes from its own stream so the initial weights do not depend on it.
  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  bool labels_usable = false;
  if (!val_labels.empty()) {
    std::size_t abn = 0;
    for (Label l : val_labels) abn += l == Label::abnormal;
    labels_usable = abn > 0 && abn < val_labels.size();
  }

  PlateauSchedule schedule(cfg.learning_rate, cfg.plateau_factor, cfg.plateau_patience_epochs);
  TrainResult result;
  result.trace.best_val_mse = std::numeric_limits<double>::infinity();

  for (std::uint64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = schedule.lr();
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grads.set_zero();
      for (std::size_t k = start; k < end; ++k) {
        const auto x = train.vectors.row(order[k]);
        forward(current.params, x, acts);
        const double loss = sae_loss<float>(x, acts.recon, acts.latent, cfg.sparsity_weight);
        if (!std::isfinite(loss)) {
          fail(ErrorKind::numeric, "non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch_index));
        }
        loss_sum += loss;
        backward(current.params, acts, cfg.sparsity_weight, grads);
      }
      adam_update(current.params, grads, adam, cfg, lr, end - start);
      if (!current.params.all_finite()) {
        fail(ErrorKind::numeric, "non-finite parameters after epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_index));
      }
    }

    const ScoreTable val_scores = score_pooled(current, val);
    double val_sum = 0;
    for (double s : val_scores.scores) val_sum += s;
    const double val_mse = val_sum / static_cast<double>(val_scores.size());
    if (!std::isfinite(val_mse)) fail(ErrorKind::numeric, "non-finite validation MSE at epoch " + std::to_string(epoch));

    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), val_mse, lr, -1};
    if (labels_usable) rec.val_auc = auc(val_scores.scores, val_labels);
    result.trace.epochs.push_back(rec);

    if (val_mse < result.trace.best_val_mse) {
      result.trace.best_val_mse = val_mse;
      result.trace.best_epoch = epoch;
      result.model.params = current.params;
    }
    schedule.step(val_mse);
  }
  result.model.best_epoch = result.trace.best_epoch;
  result.model.best_val_mse = result.trace.best_val_mse;
  return result;
}

std::string format_trace_csv(const TrainTrace& trace) {
  std::string text = "# best_epoch=" + std::to_string(trace.best_epoch) +
                     " best_val_mse=" + format_real(trace.best_val_mse) + "\n";
  text += "epoch,train_loss,val_mse,lr,val_auc\n";
  for (const auto& e : trace.epochs) {
    text += std::to_string(e.epoch) + "," + format_real(e.train_loss) + "," + format_real(e.val_mse) + "," +
            format_real(e.lr) + "," + (e.val_auc >= 0 ? format_real(e.val_auc) : std::string()) + "\n";
  }
  return text;
}

}  // namespace toxscreen
