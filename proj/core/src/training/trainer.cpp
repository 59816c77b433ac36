#include "tango/training/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

namespace tango::training {

using ad::Tensor;
using graphs::GraphSample;

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw std::invalid_argument("lr must be non-negative");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be non-negative");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (max_epochs == 0) throw std::invalid_argument("max_epochs must be positive");
  if (patience > max_epochs) throw std::invalid_argument("patience must not exceed max_epochs");
}

namespace {

/// Runs fn(i) for i in [0, count) over up to `threads` workers.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<Tensor> batch_gradient(const Predictor& model, std::span<const GraphSample* const> batch,
                                   std::size_t threads, double* loss) {
  if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
  std::size_t entries = 0;
  for (const auto* s : batch) entries += s->target().size();
  const double weight = 1.0 / static_cast<double>(entries);

  std::vector<LossGradient> per(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) { per[i] = loss_gradient(model, *batch[i], weight); });

  std::vector<Tensor> total = std::move(per.front().params);
  double sse = per.front().sse;
  for (std::size_t i = 1; i < per.size(); ++i) {
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += per[i].params[k];
    sse += per[i].sse;
  }
  if (loss != nullptr) *loss = sse * weight;
  return total;
}

Evaluation evaluate(const Predictor& model, std::span<const GraphSample> split, Metric metric, std::size_t threads) {
  if (split.empty()) throw std::invalid_argument("evaluate: empty split");
  std::vector<Tensor> preds(split.size());
  parallel_for(split.size(), threads, [&](std::size_t i) { preds[i] = predict(model, split[i]); });
  ErrorAccumulator acc;
  for (std::size_t i = 0; i < split.size(); ++i) acc.add(preds[i], split[i].target());
  return {acc.mse(), acc.mae(), acc.metric(metric)};
}

RunHistory train(Predictor& model, const graphs::DatasetSplit& data, const TrainConfig& cfg,
                 const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.train.empty()) throw std::invalid_argument("train: empty training split");
  const auto& val = data.val.empty() ? data.train : data.val;

  const auto params = parameter_list(model);
  OptimState opt;
  Rng rng(cfg.seed ^ 0x5EED);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  RunHistory h;
  h.best_val_loss = INFINITY;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    EpochRecord rec;
    rec.epoch = epoch;
    double sse = 0.0;
    std::size_t entries = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
        std::vector<const GraphSample*> batch;
        for (std::size_t i = start; i < stop; ++i) batch.push_back(&data.train[order[i]]);
        std::size_t batch_entries = 0;
        for (const auto* s : batch) batch_entries += s->target().size();
        double loss = 0.0;
        const auto grads = batch_gradient(model, batch, cfg.threads, &loss);
        if (!std::isfinite(loss)) throw ad::NonFiniteError("non-finite batch loss");
        adam_step(params, grads, opt, cfg.lr, cfg.weight_decay);
        sse += loss * static_cast<double>(batch_entries);
        entries += batch_entries;
      }
      const auto ev = evaluate(model, val, cfg.metric, cfg.threads);
      rec.train_loss = sse / static_cast<double>(entries);
      rec.val_loss = ev.mse;
      rec.val_metric = ev.metric;
    } catch (const ad::NonFiniteError& e) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(rec.val_loss)) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch) + ": non-finite validation loss");
    }
    h.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_loss < h.best_val_loss) {
      h.best_val_loss = rec.val_loss;
      h.best_epoch = epoch;
      h.best = nets::snapshot(model);
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      break;
    }
  }
  nets::restore(model, h.best);
  if (!data.test.empty()) {
    const auto ev = evaluate(model, data.test, cfg.metric, cfg.threads);
    h.test_metric = ev.metric;
    h.test_mse = ev.mse;
  }
  return h;
}

Grid default_gpp_grid() {
  return {{"L", {"1", "5", "10", "20"}},
          {"L_gnn", {"1", "2", "4", "8", "16"}},
          {"d", {"10", "20", "30"}},
          {"epsilon", {"0.001", "0.1", "1.0"}},
          {"lr", {"0.001", "0.0001"}},
          {"weight_decay", {"0", "1e-06", "1e-05"}},
          {"batch_size", {"32", "64", "128"}}};
}

namespace {

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("hyperparameter " + key + ": cannot parse '" + text + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("hyperparameter " + key + ": cannot parse '" + text + "'");
  }
  return v;
}

}  // namespace

void apply_hyperparameter(ModelConfig& model, TrainConfig& train, const std::string& key, const std::string& value) {
  if (key == "L") {
    model.tango.L = parse_count(key, value);
  } else if (key == "L_gnn") {
    model.gnn_depth = parse_count(key, value);
  } else if (key == "d") {
    model.tango.d = parse_count(key, value);
  } else if (key == "epsilon") {
    model.tango.epsilon = parse_real(key, value);
  } else if (key == "lr") {
    train.lr = parse_real(key, value);
  } else if (key == "weight_decay") {
    train.weight_decay = parse_real(key, value);
  } else if (key == "batch_size") {
    train.batch_size = parse_count(key, value);
  } else if (key == "activation") {
    const auto a = nets::parse_activation(value);
    if (!a) throw std::invalid_argument("hyperparameter activation: unknown value '" + value + "'");
    model.sigma = *a;
  } else {
    throw std::invalid_argument("unknown hyperparameter '" + key + "'");
  }
}

GridResult grid_search(const ModelConfig& base_model, const TrainConfig& base_train, const Grid& grid,
                       const graphs::DatasetSplit& data, std::size_t budget) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  std::size_t total = 1;
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw std::invalid_argument("grid_search: no values for " + key);
    total *= values.size();
  }
  std::vector<std::size_t> points(total);
  std::iota(points.begin(), points.end(), 0);
  if (budget > 0 && budget < total) {
    Rng rng(base_train.seed ^ 0x6121D);
    rng.shuffle(std::span<std::size_t>(points));
    points.resize(budget);
    std::sort(points.begin(), points.end());
  }

  GridResult out;
  for (const std::size_t flat : points) {
    GridRun run;
    run.model = base_model;
    run.train = base_train;
    std::size_t rest = flat;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      const auto& [key, values] = *it;
      const auto& value = values[rest % values.size()];
      rest /= values.size();
      run.point[key] = value;
      apply_hyperparameter(run.model, run.train, key, value);
    }
    Rng init(run.train.seed);
    Predictor model = init_predictor(run.model, init);
    RunHistory hist = train(model, data, run.train);
    run.best_val_loss = hist.best_val_loss;
    out.runs.push_back(run);
    if (out.runs.size() == 1 || run.best_val_loss < out.runs[out.best].best_val_loss) {
      out.best = out.runs.size() - 1;
      out.best_history = std::move(hist);
      out.best_model = std::move(model);
    }
  }
  return out;
}

void write_metrics_csv(const RunHistory& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "epoch,train_loss,val_loss,val_metric\n";
  for (const auto& e : h.epochs) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.val_metric << '\n';
}

}  // namespace tango::training
