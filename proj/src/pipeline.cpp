#include "actland/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <thread>

#include "actland/analysis.hpp"
#include "actland/error.hpp"
#include "actland/random.hpp"
#include "actland/svg.hpp"

namespace actland {

namespace fs = std::filesystem;
using json = nlohmann::json;

Landscape layer_landscape(const PointCloud& activation, std::size_t layer, std::size_t depth,
                          const HomologySection& homology) {
  const EssentialPolicy policy =
      homology.cap_essential ? EssentialPolicy::cap(homology.r_max) : EssentialPolicy::drop();
  DistanceMatrix dm;
  try {
    if (homology.mode == HomologySection::Mode::Standard) {
      dm = pairwise_distances(center_unit_diameter(activation));
    } else {
      dm = local_homology_metric(activation, layer > 0 && layer < depth);
    }
  } catch (const Error& e) {
    // A hidden layer can map the whole batch to one point (every unit dead).
    // Its filtration is a single vertex: no finite bars.
    if (layer == 0 || e.code() != ErrorCode::DegenerateCloud) throw;
    PersistenceDiagram point{homology.degree, {}};
    if (homology.degree == 0) point.pairs.push_back({0.0, kInfinity});
    return landscape_from_diagram(point, policy);
  }
  PersistenceOptions po;
  po.engine = homology.engine;
  po.r_max = homology.r_max;
  const auto diagrams = vr_persistence(dm, homology.degree, po);
  return landscape_from_diagram(diagrams[static_cast<std::size_t>(homology.degree)], policy);
}

LandscapeCurve activation_landscape_curve(const MlpParams& params, const PointCloud& batch,
                                          const HomologySection& homology) {
  const auto trace = forward_with_activations(params, batch);
  LandscapeCurve curve;
  for (std::size_t i = 0; i < trace.activations.size(); ++i) {
    try {
      curve.push_back(layer_landscape(trace.activations[i], i, params.depth(), homology));
    } catch (const Error& e) {
      throw Error(e.code(), "layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return curve;
}

DiscretizedCurve discretize_curve(const LandscapeCurve& curve, const Grid& grid) {
  DiscretizedCurve out;
  out.reserve(curve.size());
  for (const auto& ls : curve) out.push_back(discretize(ls, grid));
  return out;
}

namespace {

std::string number_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_number(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

std::string index_name(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

fs::path network_dir(const ExperimentConfig& cfg, std::size_t net) {
  return fs::path(cfg.output_dir) / "networks" / index_name("net_", net, 3);
}

fs::path snapshot_path(const ExperimentConfig& cfg, std::size_t net, std::size_t thr) {
  return network_dir(cfg, net) / (index_name("snapshot_", thr, 2) + ".bin");
}

fs::path landscape_path(const ExperimentConfig& cfg, std::size_t net, std::size_t thr, std::size_t layer) {
  return fs::path(cfg.output_dir) / "landscapes" / index_name("net_", net, 3) / index_name("thr_", thr, 2) /
         (index_name("layer_", layer, 2) + ".csv");
}

fs::path results_dir(const ExperimentConfig& cfg) { return fs::path(cfg.output_dir) / "results"; }

// Write through a temporary file so an interrupted run never leaves a
// truncated file that --resume would trust.
void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body, bool binary = false) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    body(out);
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::ifstream open_read(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  return in;
}

void say(const PipelineOptions& o, const std::string& msg) {
  if (o.log) *o.log << msg << std::endl;
}

// Runs work(i) for i in [0, count) on `threads` workers; sink(i, result) is
// called on the calling thread only, so it may write files.
template <class R>
void run_jobs(std::size_t count, std::size_t threads, const std::function<R(std::size_t)>& work,
              const std::function<void(std::size_t, R&)>& sink) {
  if (count == 0) return;
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      R r = work(i);
      sink(i, r);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex m;
  std::condition_variable cv;
  std::vector<std::pair<std::size_t, R>> done;
  std::exception_ptr error;
  std::size_t finished_workers = 0;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (!stop) {
        const std::size_t i = next++;
        if (i >= count) break;
        try {
          R r = work(i);
          std::lock_guard lock(m);
          done.emplace_back(i, std::move(r));
        } catch (...) {
          std::lock_guard lock(m);
          if (!error) error = std::current_exception();
          stop = true;
        }
        cv.notify_one();
      }
      std::lock_guard lock(m);
      ++finished_workers;
      cv.notify_one();
    });
  }
  std::exception_ptr sink_error;
  while (true) {
    std::vector<std::pair<std::size_t, R>> batch;
    bool all_done = false;
    {
      std::unique_lock lock(m);
      cv.wait(lock, [&] { return !done.empty() || finished_workers == threads; });
      batch.swap(done);
      all_done = finished_workers == threads && done.empty();
    }
    for (auto& [i, r] : batch) {
      if (sink_error) break;
      try {
        sink(i, r);
      } catch (...) {
        sink_error = std::current_exception();
        stop = true;
      }
    }
    if (all_done) break;
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  if (sink_error) std::rethrow_exception(sink_error);
}

struct Prepared {
  LabeledDataset data;
  Split split;
  std::vector<PointCloud> batches;  // one per resample
};

LabeledDataset restrict(const LabeledDataset& ds, const std::vector<std::size_t>& idx) {
  LabeledDataset out;
  out.cloud = ds.cloud.subset(idx);
  out.class_names = ds.class_names;
  if (!ds.lattice.empty()) {
    for (auto i : idx) out.lattice.push_back(ds.lattice[i]);
  }
  return out;
}

Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p;
  const auto& d = cfg.dataset;
  if (d.kind == DatasetSection::Kind::Disks) {
    p.data = generate_disks(d.disks);
  } else {
    p.data = load_idx(d.images, d.labels);
    if (d.pool_size > 0) p.data = restrict(p.data, random_subset(p.data.cloud.size(), d.pool_size, d.split_seed));
  }
  p.split = split_and_subsample(p.data, d.train_fraction, 0, d.split_seed);

  const auto& b = cfg.batch;
  std::vector<std::size_t> candidates;
  if (b.stride > 0) {
    candidates = sublattice_indices(p.data, b.stride);
  } else {
    candidates.resize(p.data.cloud.size());
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  }
  if (b.class_id >= 0) candidates = filter_class(p.data, candidates, b.class_id);
  if (b.stride > 0) {
    if (candidates.size() < 2) throw Error(ErrorCode::ConfigInvalid, "sublattice batch has fewer than two points");
    p.batches.push_back(p.data.cloud.subset(candidates));
    return p;
  }
  for (std::size_t r = 0; r < b.resamples; ++r) {
    const auto pick = random_subset(candidates.size(), b.size, mix_seed(b.seed, r));
    std::vector<std::size_t> idx;
    for (auto i : pick) idx.push_back(candidates[i]);
    p.batches.push_back(p.data.cloud.subset(idx));
  }
  return p;
}

struct NetworkStatus {
  std::uint64_t seed = 0;
  std::vector<double> reached;
  std::vector<double> unreached;
  bool complete() const { return unreached.empty(); }
};

std::optional<NetworkStatus> read_status(const ExperimentConfig& cfg, std::size_t net) {
  const auto path = network_dir(cfg, net) / "status.json";
  if (!fs::exists(path)) return std::nullopt;
  auto in = open_read(path);
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Io, "unreadable " + path.string());
  NetworkStatus s;
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& snap : j.at("snapshots")) s.reached.push_back(snap.at("threshold").get<double>());
  s.unreached = j.at("unreached").get<std::vector<double>>();
  return s;
}

void check_output_dir(const ExperimentConfig& cfg, const PipelineOptions& options) {
  const fs::path dir(cfg.output_dir);
  const fs::path resolved = dir / "config.resolved";
  const std::string text = describe(cfg);
  if (options.resume && fs::exists(resolved)) {
    auto in = open_read(resolved);
    std::stringstream existing;
    existing << in.rdbuf();
    if (existing.str() != text) {
      throw Error(ErrorCode::ConfigInvalid, dir.string() + " holds a run with a different configuration");
    }
    return;
  }
  write_file(resolved, [&](std::ostream& out) { out << text; });
}

// Networks the downstream stages use: those that met every threshold.
std::vector<std::size_t> included_networks(const ExperimentConfig& cfg, std::vector<std::size_t>* excluded) {
  std::vector<std::size_t> keep;
  for (std::size_t n = 0; n < cfg.training.networks; ++n) {
    const auto status = read_status(cfg, n);
    if (!status) throw Error(ErrorCode::Io, "network " + std::to_string(n) + " has not been trained");
    if (status->complete()) {
      keep.push_back(n);
    } else if (cfg.training.exclude_unreached) {
      if (excluded) excluded->push_back(n);
    } else {
      throw Error(ErrorCode::ThresholdUnreached,
                  "network " + std::to_string(n) + " missed " + std::to_string(status->unreached.size()) +
                      " threshold(s), first " + short_number(status->unreached.front()));
    }
  }
  if (keep.empty()) throw Error(ErrorCode::ThresholdUnreached, "no network met every threshold");
  return keep;
}

Grid analysis_grid(const ExperimentConfig& cfg) { return Grid::covering(cfg.homology.r_max, cfg.homology.step); }

}  // namespace

std::string describe(const ExperimentConfig& cfg) {
  std::ostringstream o;
  const auto list = [&](const auto& xs) {
    std::string s;
    for (const auto& x : xs) s += (s.empty() ? "" : " ") + number_text(static_cast<double>(x));
    return s;
  };
  const auto& d = cfg.dataset;
  o << "[dataset]\n";
  if (d.kind == DatasetSection::Kind::Disks) {
    o << "kind = disks\nouter_radius = " << number_text(d.disks.outer_radius)
      << "\nsmall_disk_radius = " << number_text(d.disks.small_disk_radius)
      << "\nlattice_spacing = " << number_text(d.disks.lattice_spacing) << "\ncenters =";
    for (const auto& c : d.disks.small_disk_centers) o << ' ' << number_text(c[0]) << ' ' << number_text(c[1]);
    o << '\n';
  } else {
    o << "kind = idx\nimages = " << d.images << "\nlabels = " << d.labels << "\npool_size = " << d.pool_size << '\n';
  }
  o << "train_fraction = " << number_text(d.train_fraction) << "\nsplit_seed = " << d.split_seed << '\n';
  o << "[network]\nhidden = " << list(cfg.hidden) << '\n';
  const auto& t = cfg.training;
  o << "[training]\nthresholds = " << list(t.thresholds) << "\nlearning_rate = "
    << number_text(t.train.adam.learning_rate) << "\nbeta1 = " << number_text(t.train.adam.beta1)
    << "\nbeta2 = " << number_text(t.train.adam.beta2) << "\nepsilon = " << number_text(t.train.adam.epsilon)
    << "\nbatch_size = " << t.train.batch_size << "\nmax_epochs = " << t.train.max_epochs
    << "\nnetworks = " << t.networks << "\nseed = " << t.seed
    << "\nexclude_unreached = " << (t.exclude_unreached ? "true" : "false") << '\n';
  const auto& h = cfg.homology;
  o << "[homology]\nmode = " << (h.mode == HomologySection::Mode::Standard ? "standard" : "local")
    << "\ndegree = " << h.degree << "\nr_max = " << number_text(h.r_max) << "\nstep = " << number_text(h.step)
    << "\nengine = "
    << (h.engine == PersistenceEngine::Auto ? "auto" : h.engine == PersistenceEngine::Explicit ? "explicit" : "implicit")
    << "\ncap_essential = " << (h.cap_essential ? "true" : "false") << '\n';
  const auto& b = cfg.batch;
  o << "[batch]\nstride = " << b.stride << "\nsize = " << b.size << "\nclass = " << b.class_id
    << "\nresamples = " << b.resamples << "\nseed = " << b.seed << '\n';
  const auto& a = cfg.analysis;
  o << "[analysis]\npermutations = " << a.permutations << "\nseed = " << a.seed
    << "\npca = " << (a.pca ? "true" : "false") << '\n';
  return o.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : describe(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void run_training(const ExperimentConfig& cfg, const PipelineOptions& options) {
  cfg.validate();
  if (!options.resume) {
    for (const char* sub : {"networks", "landscapes", "results"}) fs::remove_all(fs::path(cfg.output_dir) / sub);
  }
  check_output_dir(cfg, options);
  const Prepared prep = prepare(cfg);
  const PointCloud train = prep.data.cloud.subset(prep.split.train);
  const auto widths = cfg.widths();
  if (train.dim() != widths.front()) {
    throw Error(ErrorCode::ConfigInvalid, "dataset dimension " + std::to_string(train.dim()) +
                                              " does not match the network input");
  }

  std::vector<std::size_t> todo;
  for (std::size_t n = 0; n < cfg.training.networks; ++n) {
    if (options.resume && read_status(cfg, n)) continue;
    todo.push_back(n);
  }
  say(options, "training " + std::to_string(todo.size()) + " network(s) on " + std::to_string(train.size()) +
                   " points");

  std::vector<std::size_t> failed;
  const std::function<TrainingResult(std::size_t)> work = [&](std::size_t i) {
    const MlpSpec spec{widths, cfg.training.seed + todo[i]};
    return train_with_snapshots(spec, train, cfg.training.thresholds, cfg.training.train);
  };
  const std::function<void(std::size_t, TrainingResult&)> sink = [&](std::size_t i, TrainingResult& r) {
    const std::size_t net = todo[i];
    for (std::size_t s = 0; s < r.snapshots.size(); ++s) {
      write_file(snapshot_path(cfg, net, s), [&](std::ostream& out) { write_params(out, r.snapshots[s].params); },
                 true);
    }
    write_file(network_dir(cfg, net) / "training_log.csv",
               [&](std::ostream& out) { write_training_log_csv(out, r.log); });
    json status;
    status["seed"] = cfg.training.seed + net;
    status["snapshots"] = json::array();
    for (const auto& s : r.snapshots) {
      status["snapshots"].push_back(
          {{"threshold", s.threshold}, {"epoch", s.epoch}, {"step", s.step_index}, {"accuracy", s.achieved_accuracy}});
    }
    status["unreached"] = r.unreached;
    status["epochs"] = r.log.empty() ? 0 : r.log.back().epoch;
    write_file(network_dir(cfg, net) / "status.json", [&](std::ostream& out) { out << status.dump(2) << '\n'; });
    say(options, "network " + std::to_string(net) + ": " + std::to_string(r.snapshots.size()) + "/" +
                     std::to_string(cfg.training.thresholds.size()) + " thresholds after " +
                     std::to_string(r.log.empty() ? 0 : r.log.back().epoch) + " epochs");
    if (!r.all_reached()) failed.push_back(net);
  };
  run_jobs(todo.size(), options.jobs, work, sink);
  if (!failed.empty() && !cfg.training.exclude_unreached) {
    throw Error(ErrorCode::ThresholdUnreached,
                std::to_string(failed.size()) + " network(s) missed a threshold, first network " +
                    std::to_string(failed.front()));
  }
}

void run_landscapes(const ExperimentConfig& cfg, const PipelineOptions& options) {
  cfg.validate();
  if (!options.resume) {
    for (const char* sub : {"landscapes", "results"}) fs::remove_all(fs::path(cfg.output_dir) / sub);
  }
  check_output_dir(cfg, options);
  const auto nets = included_networks(cfg, nullptr);
  const Prepared prep = prepare(cfg);
  const Grid grid = analysis_grid(cfg);
  const std::size_t layers = cfg.widths().size();
  const std::size_t thresholds = cfg.training.thresholds.size();

  struct Job {
    std::size_t net, thr, layer;
  };
  std::vector<Job> jobs;
  for (auto n : nets)
    for (std::size_t t = 0; t < thresholds; ++t)
      for (std::size_t l = 0; l < layers; ++l) {
        if (options.resume && fs::exists(landscape_path(cfg, n, t, l))) continue;
        jobs.push_back({n, t, l});
      }
  say(options, "computing " + std::to_string(jobs.size()) + " layer landscape(s) on " +
                   std::to_string(prep.batches.front().size()) + "-point batches");

  const std::function<DiscretizedLandscape(std::size_t)> work = [&](std::size_t i) {
    const Job& j = jobs[i];
    auto in = open_read(snapshot_path(cfg, j.net, j.thr), true);
    const MlpParams params = read_params(in);
    std::vector<DiscretizedLandscape> samples;
    for (const auto& batch : prep.batches) {
      const auto trace = forward_with_activations(params, batch);
      try {
        samples.push_back(
            discretize(layer_landscape(trace.activations[j.layer], j.layer, params.depth(), cfg.homology), grid));
      } catch (const Error& e) {
        throw Error(e.code(), "network " + std::to_string(j.net) + ", threshold " +
                                  short_number(cfg.training.thresholds[j.thr]) + ", layer " +
                                  std::to_string(j.layer) + ": " + e.what());
      }
    }
    return samples.size() == 1 ? samples.front() : average(samples);
  };
  std::size_t written = 0;
  const std::function<void(std::size_t, DiscretizedLandscape&)> sink = [&](std::size_t i, DiscretizedLandscape& ls) {
    const Job& j = jobs[i];
    write_file(landscape_path(cfg, j.net, j.thr, j.layer), [&](std::ostream& out) { write_landscape_csv(out, ls); });
    if (++written % 50 == 0) say(options, std::to_string(written) + "/" + std::to_string(jobs.size()) + " landscapes");
  };
  run_jobs(jobs.size(), options.jobs, work, sink);
}

std::vector<DiscretizedCurve> load_curves(const ExperimentConfig& cfg, std::size_t threshold_index) {
  const auto nets = included_networks(cfg, nullptr);
  const std::size_t layers = cfg.widths().size();
  std::vector<DiscretizedCurve> curves;
  for (auto n : nets) {
    DiscretizedCurve c;
    for (std::size_t l = 0; l < layers; ++l) {
      auto in = open_read(landscape_path(cfg, n, threshold_index, l));
      c.push_back(read_discretized_landscape_csv(in));
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

namespace {

std::vector<std::string> list_files(const fs::path& root) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), root).generic_string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void write_manifest(const ExperimentConfig& cfg, RunManifest& m) {
  const fs::path root(cfg.output_dir);
  fs::create_directories(root);
  m.files = list_files(root);
  m.files.erase(std::remove_if(m.files.begin(), m.files.end(),
                               [](const std::string& f) { return f.ends_with(".tmp"); }),
                m.files.end());
  if (std::find(m.files.begin(), m.files.end(), "manifest.json") == m.files.end()) {
    m.files.push_back("manifest.json");
    std::sort(m.files.begin(), m.files.end());
  }
  json j;
  j["config_hash"] = m.config_hash;
  j["status"] = m.status;
  j["network_seeds"] = m.network_seeds;
  j["excluded_networks"] = m.excluded_networks;
  j["files"] = m.files;
  j["timings_seconds"] = m.timings;
  write_file(root / "manifest.json", [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RunManifest run_analysis(const ExperimentConfig& cfg, const PipelineOptions& options) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  fs::remove_all(results_dir(cfg));
  RunManifest manifest;
  manifest.config_hash = config_hash(cfg);
  for (std::size_t n = 0; n < cfg.training.networks; ++n) manifest.network_seeds.push_back(cfg.training.seed + n);
  const auto nets = included_networks(cfg, &manifest.excluded_networks);

  const auto& thresholds = cfg.training.thresholds;
  const std::size_t layers = cfg.widths().size();
  const fs::path out = results_dir(cfg);
  std::vector<std::vector<DiscretizedCurve>> curves;
  std::vector<DiscretizedCurve> averages;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    curves.push_back(load_curves(cfg, t));
    averages.push_back(average_curves(curves.back()));
  }
  say(options, "analysing " + std::to_string(nets.size()) + " network(s) x " + std::to_string(thresholds.size()) +
                   " threshold(s)");

  // (a) average landscapes: one file each, plus the grid figure and its twin.
  std::vector<svg::Panel> grid_panels;
  std::ostringstream grid_csv;
  grid_csv << "threshold,layer,level,sample_index,t,value\n";
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    for (std::size_t l = 0; l < layers; ++l) {
      const auto& ls = averages[t][l];
      write_file(out / "averages" / (index_name("thr_", t, 2) + "_" + index_name("layer_", l, 2) + ".csv"),
                 [&](std::ostream& o) { write_landscape_csv(o, ls); });
      svg::Panel panel{"threshold " + short_number(thresholds[t]) + ", layer " + std::to_string(l), {}};
      for (std::size_t k = 0; k < ls.levels; ++k) {
        const auto v = ls.level(k);
        std::size_t first = v.size(), last = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (v[i] != 0.0) {
            first = std::min(first, i);
            last = i;
          }
        }
        svg::Series s{"level " + std::to_string(k + 1), {}, {}};
        if (first < v.size()) {
          const std::size_t lo = first > 0 ? first - 1 : first;
          const std::size_t hi = std::min(v.size() - 1, last + 1);
          for (std::size_t i = lo; i <= hi; ++i) {
            s.x.push_back(ls.grid.at(i));
            s.y.push_back(v[i]);
            grid_csv << short_number(thresholds[t]) << ',' << l << ',' << k + 1 << ',' << i << ','
                     << number_text(ls.grid.at(i)) << ',' << number_text(v[i]) << '\n';
          }
        }
        panel.series.push_back(std::move(s));
      }
      grid_panels.push_back(std::move(panel));
    }
  }
  write_file(out / "average_landscapes.csv", [&](std::ostream& o) { o << grid_csv.str(); });
  svg::ChartOptions grid_opts;
  grid_opts.title = "Average activation landscapes";
  grid_opts.x_label = "t";
  grid_opts.columns = layers;
  grid_opts.panel_width = 200;
  grid_opts.panel_height = 150;
  grid_opts.legend = false;
  write_file(out / "average_landscapes.svg", [&](std::ostream& o) { svg::write_line_charts(o, grid_panels, grid_opts); });

  // (b) complexity: mean of per-network norms and norm of the average.
  std::ostringstream cx;
  cx << "threshold,layer,mean_norm,norm_of_mean\n";
  svg::Panel mean_panel{"mean of norms", {}}, of_mean_panel{"norm of mean", {}};
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    std::vector<double> mean_norm(layers, 0.0);
    for (const auto& c : curves[t]) {
      const auto norms = complexity_curve(c);
      for (std::size_t l = 0; l < layers; ++l) mean_norm[l] += norms[l] / static_cast<double>(curves[t].size());
    }
    const auto of_mean = complexity_curve(averages[t]);
    svg::Series a{"threshold " + short_number(thresholds[t]), {}, {}, true};
    svg::Series b = a;
    for (std::size_t l = 0; l < layers; ++l) {
      cx << short_number(thresholds[t]) << ',' << l << ',' << number_text(mean_norm[l]) << ','
         << number_text(of_mean[l]) << '\n';
      a.x.push_back(static_cast<double>(l));
      a.y.push_back(mean_norm[l]);
      b.x.push_back(static_cast<double>(l));
      b.y.push_back(of_mean[l]);
    }
    mean_panel.series.push_back(std::move(a));
    of_mean_panel.series.push_back(std::move(b));
  }
  write_file(out / "complexity.csv", [&](std::ostream& o) { o << cx.str(); });
  svg::ChartOptions cx_opts;
  cx_opts.title = "Topological complexity by layer";
  cx_opts.x_label = "layer";
  cx_opts.y_label = "landscape norm";
  cx_opts.columns = 2;
  cx_opts.panel_width = 380;
  cx_opts.panel_height = 280;
  cx_opts.shared_y = false;
  write_file(out / "complexity.svg", [&](std::ostream& o) {
    svg::write_line_charts(o, {mean_panel, of_mean_panel}, cx_opts);
  });

  // (c) PCA of the average landscapes, one point per (threshold, layer).
  if (cfg.analysis.pca) {
    std::vector<std::size_t> depth(1, 0);
    for (const auto& avg : averages)
      for (const auto& ls : avg) depth[0] = std::max(depth[0], ls.levels);
    std::vector<std::vector<double>> vectors;
    for (const auto& avg : averages)
      for (const auto& ls : avg) vectors.push_back(flatten_curve(DiscretizedCurve{ls}, depth));
    const auto pca = pca_project(vectors, std::min<std::size_t>(2, vectors.front().size()));
    std::ostringstream pc;
    pc << "item_id,pc1,pc2\n";
    svg::Panel panel{"", {}};
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      svg::Series s{"threshold " + short_number(thresholds[t]), {}, {}, true};
      for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t item = t * layers + l;
        const double x = pca.coordinate(item, 0);
        const double y = pca.components > 1 ? pca.coordinate(item, 1) : 0.0;
        pc << 't' << short_number(thresholds[t]) << "_l" << l << ',' << number_text(x) << ',' << number_text(y) << '\n';
        s.x.push_back(x);
        s.y.push_back(y);
      }
      panel.series.push_back(std::move(s));
    }
    write_file(out / "pca.csv", [&](std::ostream& o) { o << pc.str(); });
    svg::ChartOptions pca_opts;
    pca_opts.title = "Activation landscape curves, PCA";
    pca_opts.x_label = "pc1";
    pca_opts.y_label = "pc2";
    pca_opts.panel_width = 480;
    pca_opts.panel_height = 360;
    pca_opts.shared_y = false;
    write_file(out / "pca.svg", [&](std::ostream& o) { svg::write_line_charts(o, {panel}, pca_opts); });
  }

  // (d) pairwise permutation tests between threshold groups.
  std::vector<std::pair<std::pair<std::string, std::string>, TestResult>> rows;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    for (std::size_t j = i + 1; j < thresholds.size(); ++j) {
      const CurveGroup a{short_number(thresholds[i]), curves[i]};
      const CurveGroup b{short_number(thresholds[j]), curves[j]};
      rows.push_back({{a.label, b.label},
                      permutation_test(a, b, cfg.analysis.permutations, cfg.analysis.seed, options.jobs)});
    }
  }
  write_file(out / "permutation_tests.csv", [&](std::ostream& o) { write_test_results_csv(o, rows); });

  manifest.timings["analysis"] = seconds_since(t0);
  write_manifest(cfg, manifest);
  return manifest;
}

RunManifest run_experiment(const ExperimentConfig& cfg, const PipelineOptions& options) {
  RunManifest partial;
  partial.config_hash = config_hash(cfg);
  for (std::size_t n = 0; n < cfg.training.networks; ++n) partial.network_seeds.push_back(cfg.training.seed + n);
  try {
    auto t0 = std::chrono::steady_clock::now();
    run_training(cfg, options);
    partial.timings["training"] = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    run_landscapes(cfg, options);
    partial.timings["landscapes"] = seconds_since(t0);
    RunManifest m = run_analysis(cfg, options);
    m.timings.insert(partial.timings.begin(), partial.timings.end());
    write_manifest(cfg, m);
    return m;
  } catch (const std::exception& e) {
    partial.status = std::string("failed: ") + e.what();
    try {
      write_manifest(cfg, partial);
    } catch (...) {
    }
    throw;
  }
}

}  // namespace actland
