// Command-line front end: textual workflows, run/record/replay, gap analysis
// and the latency bench.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "unicon/unicon.hpp"

namespace fs = std::filesystem;
using namespace unicon;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitSchema = 4;

struct Workflow {
  WorkflowConfig cfg;
  std::unique_ptr<StateSpace> space;
  std::shared_ptr<Platform> platform;
  PlatformBlocks pblocks;
  GraphNode::Ptr graph;  // may be null
};

void apply_overrides(WorkflowConfig& cfg, const std::string& backend, double rate,
                     std::int64_t ticks, const std::vector<std::string>& sets) {
  if (!backend.empty()) cfg.backend_text = backend;
  if (rate > 0) cfg.rate_hz = rate;
  if (ticks >= 0) cfg.max_ticks = static_cast<std::uint64_t>(ticks);
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw SpecInvalid("--set needs key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (key == "backend") cfg.backend_text = value;
    else if (key == "rate") cfg.rate_hz = std::stod(value);
    else if (key == "ticks") cfg.max_ticks = static_cast<std::uint64_t>(std::stoll(value));
    else if (key == "platform.file") cfg.platform_file = value;
    else throw SpecInvalid("unknown --set key '" + key + "'");
  }
}

Workflow build_workflow(const std::string& config_path, const std::string& backend, double rate,
                        std::int64_t ticks, const std::vector<std::string>& sets) {
  Workflow w;
  w.cfg = parse_workflow(read_file(config_path));
  apply_overrides(w.cfg, backend, rate, ticks, sets);
  w.space = make_space(parse_backend(w.cfg.backend_text));
  apply_states(w.cfg, *w.space);
  BlockContext ctx{*w.space, nullptr};
  if (!w.cfg.platform_file.empty()) {
    fs::path plat = w.cfg.platform_file;
    if (plat.is_relative()) plat = fs::path(config_path).parent_path() / plat;
    PlatformSpec spec = parse_platform_spec(read_file(plat.string()));
    w.pblocks = make_platform(spec, *w.space, w.cfg.workflow_joints);
    w.platform = w.pblocks.platform;
    ctx.platform = &w.pblocks;
  }
  if (w.cfg.graph) w.graph = build_graph(*w.cfg.graph, ctx);
  return w;
}

RunReport run_workflow(Workflow& w, GraphNode& root, const std::string& trace_path) {
  StepTrace trace;
  RunOptions opts;
  if (!trace_path.empty()) opts.trace = &trace;
  std::uint64_t ticks = w.cfg.max_ticks ? w.cfg.max_ticks : UINT64_MAX;
  RunReport partial;
  opts.partial = &partial;
  RunReport report = run(root, *w.space, w.cfg.rate_hz, ticks, opts);
  if (!trace_path.empty()) {
    std::ofstream os(trace_path);
    os << trace.to_text();
  }
  if (w.platform) w.platform->close();
  return report;
}

void print_report(const RunReport& r) {
  std::cout << "ticks: " << r.ticks << "\nwall_s: " << r.wall_s << "\noverruns: " << r.overruns
            << "\ndone: " << (r.done ? "yes" : "no") << "\n";
}

int classify(const Error& e) {
  switch (e.code()) {
    case ErrorCode::parse_error:
    case ErrorCode::spec_invalid:
    case ErrorCode::io_failure:
    case ErrorCode::rate_invalid:
      return kExitConfig;
    case ErrorCode::schema_mismatch:
    case ErrorCode::no_common_labels:
    case ErrorCode::window_too_large:
      return kExitSchema;
    default:
      return kExitRuntime;
  }
}

std::vector<std::string> split_labels(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-oriented robot-control runtime"};
  app.require_subcommand(1);

  std::string config_path, backend_flag, trace_path, labels_csv, out_path, out_dir;
  std::string recording_a, recording_b, platform_file;
  std::vector<std::string> sets;
  double rate_flag = -1;
  std::int64_t ticks_flag = -1;
  std::size_t bench_n = 10000, bench_warmup = 1000;
  std::size_t max_shift = SIZE_MAX;
  bool squared = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--backend", backend_flag, "inproc | shm[:segment] | socket[:host:port]");
    cmd->add_option("--rate", rate_flag, "executor rate override, Hz");
    cmd->add_option("--ticks", ticks_flag, "tick budget override");
    cmd->add_option("--set", sets, "key=value config overrides");
    cmd->add_option("--trace", trace_path, "dump the step trace to this path");
  };

  auto* cmd_run = app.add_subcommand("run", "run a workflow config");
  cmd_run->add_option("config", config_path)->required();
  add_common(cmd_run);

  auto* cmd_record = app.add_subcommand("record", "run a workflow and record labels");
  cmd_record->add_option("config", config_path)->required();
  cmd_record->add_option("--labels", labels_csv, "comma-separated labels")->required();
  cmd_record->add_option("--out", out_path, "recording file")->required();
  add_common(cmd_record);

  auto* cmd_replay = app.add_subcommand("replay", "replay a recording into a workflow");
  cmd_replay->add_option("recording", recording_a)->required();
  cmd_replay->add_option("config", config_path)->required();
  cmd_replay->add_option("--record", out_path, "record labels during the replay");
  cmd_replay->add_option("--labels", labels_csv, "labels for --record");
  add_common(cmd_replay);

  auto* cmd_analyze = app.add_subcommand("analyze", "compare two recordings");
  cmd_analyze->add_option("recording_a", recording_a)->required();
  cmd_analyze->add_option("recording_b", recording_b)->required();
  cmd_analyze->add_option("--max-shift", max_shift, "shift window J (default min(n/4, 50))");
  cmd_analyze->add_option("--out", out_dir, "directory for report + per-channel CSVs");
  cmd_analyze->add_flag("--squared", squared, "use squared per-frame norms");

  auto* cmd_bench = app.add_subcommand("bench", "latency bench (recv/send, optional e2e)");
  cmd_bench->add_option("--backend", backend_flag, "inproc | shm[:segment] | socket[:host:port]")
      ->required();
  cmd_bench->add_option("--platform", platform_file, "platform spec for the e2e row");
  cmd_bench->add_option("-n,--samples", bench_n, "samples per op");
  cmd_bench->add_option("--warmup", bench_warmup, "discarded warmup samples");
  cmd_bench->add_option("--out", out_dir, "directory for report + raw sample dump");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_run) {
      Workflow w = build_workflow(config_path, backend_flag, rate_flag, ticks_flag, sets);
      if (!w.graph) throw SpecInvalid("config has no [graph]");
      print_report(run_workflow(w, *w.graph, trace_path));
      return kExitOk;
    }

    if (*cmd_record) {
      Workflow w = build_workflow(config_path, backend_flag, rate_flag, ticks_flag, sets);
      if (!w.graph) throw SpecInvalid("config has no [graph]");
      auto [rec_block, rec] = make_recorder(*w.space, split_labels(labels_csv), out_path);
      std::vector<GraphNode::Ptr> kids;
      kids.push_back(std::move(w.graph));
      kids.push_back(GraphNode::leaf(rec_block));
      auto root = GraphNode::zip(std::move(kids));
      RunReport r = run_workflow(w, *root, trace_path);
      rec->finalize();
      std::cout << "recorded " << rec->frames_written() << " frames to " << out_path << "\n";
      print_report(r);
      return kExitOk;
    }

    if (*cmd_replay) {
      Workflow w = build_workflow(config_path, backend_flag, rate_flag, ticks_flag, sets);
      auto [rep_block, rep] = make_replayer(recording_a, *w.space);
      std::vector<GraphNode::Ptr> kids;
      kids.push_back(GraphNode::leaf(rep_block));
      if (w.graph) kids.push_back(std::move(w.graph));
      std::shared_ptr<Recorder> rec;
      if (!out_path.empty()) {
        auto [rec_block, r] = make_recorder(*w.space, split_labels(labels_csv), out_path);
        rec = r;
        kids.push_back(GraphNode::leaf(rec_block));
      }
      auto root = GraphNode::zip(std::move(kids));
      RunReport r = run_workflow(w, *root, trace_path);
      if (rec) rec->finalize();
      std::cout << "replayed " << rep->trajectory().frames.size() << " frames\n";
      print_report(r);
      return kExitOk;
    }

    if (*cmd_analyze) {
      Trajectory a = Trajectory::load(recording_a);
      Trajectory b = Trajectory::load(recording_b);
      std::size_t n = std::min(a.frames.size(), b.frames.size());
      std::size_t j = max_shift != SIZE_MAX ? max_shift : default_max_shift(n);
      GapReport report = analyze(a, b, j, squared);
      std::string text = format_gap_report(report);
      std::cout << text;
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream os(out_dir + "/report.txt");
        os << text;
        write_gap_csv(report, out_dir);
      }
      return kExitOk;
    }

    if (*cmd_bench) {
      BackendKind kind = parse_backend(backend_flag);
      BackendBenchResult r = run_backend_bench(kind, bench_n, bench_warmup);
      LatencyReport report;
      report.config = "backend=" + std::string(kind.name()) +
                      " n=" + std::to_string(bench_n) + " warmup=" + std::to_string(bench_warmup);
      report.table[kind.name()][BenchOp::recv] = compute_stats(r.recv);
      report.table[kind.name()][BenchOp::send] = compute_stats(r.send);

      E2eResult e2e;
      bool have_e2e = false;
      if (!platform_file.empty()) {
        auto space = make_space(kind);
        PlatformSpec spec = parse_platform_spec(read_file(platform_file));
        for (const char* l : {"q", "dq", "q_des", "dq_des", "tau_ff", "kp", "kd"})
          space->register_zeros(l, DType::f64,
                                {static_cast<std::uint32_t>(spec.dof())});
        Platform platform(spec, *space);
        e2e = bench_e2e(*space, platform, std::max<std::size_t>(bench_n / 20, 100));
        platform.close();
        report.table[kind.name()][BenchOp::end_to_end] = compute_stats(e2e.samples);
        report.inferred_offset_ns = e2e.inferred_offset_ns;
        have_e2e = true;
      }

      std::string text = format_latency_report(report);
      std::cout << text;
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream os(out_dir + "/report.txt");
        os << text;
        std::string dump = out_dir + "/samples.csv";
        dump_samples_csv(dump, BenchOp::recv, r.recv);
        dump_samples_csv(dump, BenchOp::send, r.send, /*append=*/true);
        if (have_e2e) dump_samples_csv(dump, BenchOp::end_to_end, e2e.samples, /*append=*/true);
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
