#include "lncass/cv.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "lncass/error.hpp"
#include "lncass/math.hpp"
#include "lncass/metrics.hpp"
#include "lncass/random.hpp"

namespace lncass {

Eigen::VectorXd posterior_predict(const PosteriorModel& model, const PosteriorDraws& draws,
                                  const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd design = model.design_for(X);
  const bool logistic = model.spec().likelihood == Likelihood::bernoulli_logit;
  Eigen::VectorXd total = Eigen::VectorXd::Zero(X.rows());
  for (Index c = 0; c < draws.num_chains(); ++c) {
    const Eigen::MatrixXd& chain = draws.chain(c);
    for (Index d = 0; d < chain.rows(); ++d) {
      const Eigen::VectorXd q = chain.row(d).transpose();
      const Eigen::VectorXd eta = (design * model.coefficients(q)).array() + model.intercept(q);
      if (logistic) {
        total += eta.unaryExpr([](double v) { return inv_logit(v); });
      } else {
        total += eta;
      }
    }
  }
  return total / double(draws.num_chains() * draws.num_draws());
}

namespace {

struct FoldTask {
  int run;
  int fold;
  const FoldPlan* plan;
};

struct FoldOutput {
  std::vector<FoldPrediction> predictions;
  int divergences = 0;
};

FoldOutput run_fold(const Dataset& data, const ModelSpec& spec, const SamplerConfig& sampler,
                    const CvOptions& options, const FoldTask& task) {
  const auto& test_rows = task.plan->test[std::size_t(task.fold)];
  Dataset train = data.rows(task.plan->train[std::size_t(task.fold)]);
  Dataset test = data.rows(test_rows);

  const Preprocessor pre = Preprocessor::fit(train, options.preprocess);
  train = pre.apply(std::move(train));
  test = pre.apply(std::move(test), /*clamp_unit=*/true);
  if (options.screen_top_k > 0 && !options.global_screen) {
    WaldScreenResult screened = wald_screen(train, std::min(options.screen_top_k, train.p()));
    test = test.columns(screened.selected);
    train = std::move(screened.data);
  }

  ModelSpec fold_spec = spec;
  fold_spec.p = train.p();
  fold_spec.n = 0;
  SamplerConfig fold_sampler = sampler;
  fold_sampler.seed = derive_seed(sampler.seed, std::uint64_t(task.run) * 100000 + task.fold);
  fold_sampler.threads = 1;

  const PosteriorModel model(fold_spec, train);
  const PosteriorDraws draws = sample(model, fold_sampler);
  const Eigen::VectorXd predicted = posterior_predict(model, draws, test.X);

  FoldOutput out;
  out.divergences = draws.total_divergences();
  for (std::size_t r = 0; r < test_rows.size(); ++r) {
    out.predictions.push_back(
        {task.run, task.fold, test_rows[r], data.y[test_rows[r]], predicted[Index(r)]});
  }
  return out;
}

}  // namespace

CvResult cross_validate(const Dataset& data, const ModelSpec& spec, const SamplerConfig& sampler,
                        const CvOptions& options) {
  require_binary_response(data);
  sampler.validate();
  if (options.runs < 1 || options.threads < 1) {
    throw Error(ErrorKind::invalid_argument, "cross-validation needs runs >= 1 and threads >= 1");
  }
  if (options.screen_top_k > 0 && spec.prior == PriorKind::lncass_grouped) {
    throw Error(ErrorKind::invalid_argument,
                "screening changes the covariate set and cannot be combined with fixed groups");
  }

  Dataset working = data;
  if (options.screen_top_k > 0 && options.global_screen) {
    const Preprocessor pre = Preprocessor::fit(working, options.preprocess);
    const WaldScreenResult screened =
        wald_screen(pre.apply(working), std::min(options.screen_top_k, working.p()));
    working = working.columns(screened.selected);
  }

  std::vector<FoldPlan> plans;
  const int runs = options.scheme == CvScheme::loocv_balanced ? 1 : options.runs;
  for (int r = 0; r < runs; ++r) {
    const std::uint64_t plan_seed = derive_seed(options.seed, std::uint64_t(r));
    plans.push_back(options.scheme == CvScheme::loocv_balanced
                        ? loocv_balanced(data.y, plan_seed)
                        : kfold_stratified(data.y, options.folds, plan_seed));
  }
  std::vector<FoldTask> tasks;
  for (int r = 0; r < runs; ++r) {
    for (int f = 0; f < plans[std::size_t(r)].num_folds(); ++f) {
      tasks.push_back({r, f, &plans[std::size_t(r)]});
    }
  }

  std::vector<FoldOutput> outputs(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      try {
        outputs[t] = run_fold(working, spec, sampler, options, tasks[t]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::size_t(options.threads), tasks.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CvResult result;
  for (auto& o : outputs) {
    result.total_divergences += o.divergences;
    result.predictions.insert(result.predictions.end(), o.predictions.begin(),
                              o.predictions.end());
  }
  std::stable_sort(result.predictions.begin(), result.predictions.end(),
                   [](const FoldPrediction& a, const FoldPrediction& b) {
                     if (a.run != b.run) return a.run < b.run;
                     if (a.fold != b.fold) return a.fold < b.fold;
                     return a.observation < b.observation;
                   });

  const auto collect = [&](int run) {
    std::vector<double> scores, labels;
    for (const auto& p : result.predictions) {
      if (run < 0 || p.run == run) {
        scores.push_back(p.prediction);
        labels.push_back(p.label);
      }
    }
    return auc(Eigen::Map<Eigen::VectorXd>(scores.data(), Index(scores.size())),
               Eigen::Map<Eigen::VectorXd>(labels.data(), Index(labels.size())));
  };
  for (int r = 0; r < runs; ++r) result.run_auc.push_back(collect(r));
  double sum = 0.0;
  for (double a : result.run_auc) sum += a;
  result.mean_run_auc = sum / double(result.run_auc.size());
  result.pooled_auc = collect(-1);
  return result;
}

}  // namespace lncass
