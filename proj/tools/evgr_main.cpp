// evgr command line: ingest, validate, dfg, bench, generate, stats.
// Exit codes: 0 success, 1 data violation or parse error, 2 store/system
// error, 64 usage error, 77 access denied.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "evgr/access.hpp"
#include "evgr/bench.hpp"
#include "evgr/dfg.hpp"
#include "evgr/error.hpp"
#include "evgr/generate.hpp"
#include "evgr/ingest.hpp"
#include "evgr/store.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitStore = 2;
constexpr int kExitUsage = 64;
constexpr int kExitDenied = 77;

int exit_code_for(evgr::Errc code) {
  using evgr::Errc;
  switch (code) {
    case Errc::ParseError:
    case Errc::MissingField:
    case Errc::MissingColumn:
    case Errc::TimestampRegression:
    case Errc::DuplicateCase:
    case Errc::SoundnessRequired:
    case Errc::NonemptyRequired:
    case Errc::PolicyError:
      return kExitData;
    case Errc::InvalidWindow:
    case Errc::InvalidDicing:
    case Errc::UnknownRole:
      return kExitUsage;
    case Errc::AccessDenied:
      return kExitDenied;
    case Errc::DuplicateLog:
    case Errc::CorruptStore:
    case Errc::VersionMismatch:
    case Errc::IoError:
    case Errc::UnknownNode:
    case Errc::KindMismatch:
    case Errc::BudgetExceeded:
      return kExitStore;
  }
  return kExitStore;
}

struct CommonFlags {
  std::string store_dir;
  uint64_t memory_limit_mib = 256;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

evgr::GraphStore open_store(const CommonFlags& flags) {
  return evgr::GraphStore::open(flags.store_dir,
                                evgr::MemoryBudget::mib(flags.memory_limit_mib));
}

void write_output(const std::string& out_path, const std::string& data) {
  if (out_path.empty()) {
    std::cout << data;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) evgr::throw_error(evgr::Errc::IoError, "cannot write " + out_path);
  out << data;
}

std::unique_ptr<evgr::TraceSource> make_source(std::istream& in,
                                               const std::string& format,
                                               const evgr::ColumnMapping& mapping) {
  if (format == "xes") return std::make_unique<evgr::XesParser>(in);
  return std::make_unique<evgr::CsvParser>(in, mapping);
}

int print_report(const evgr::SoundnessReport& report) {
  if (report.is_sound()) {
    std::cout << "sound\n";
    return kExitOk;
  }
  for (const auto& v : report.violations)
    std::cout << "rule=" << v.rule << " node=" << v.node.value << " "
              << v.description << "\n";
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-log graph store and DFG engine"};
  app.require_subcommand(1);

  CommonFlags common;
  std::string input_path, format = "xes", log_name, out_path;
  evgr::ColumnMapping mapping{"case", "activity", "timestamp", "iso8601"};
  std::string from_str, to_str, dfg_format = "matrix";
  std::string role = "admin", policy_path;
  std::string window_step = "1d", span = "30d", start_str = "2020-01-01T00:00:00Z";
  unsigned repeat = 3;
  evgr::SyntheticSpec spec;

  auto add_store = [&](CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--store", common.store_dir, "store directory");
    if (required) opt->required();
    cmd->add_option("--memory-limit", common.memory_limit_mib,
                    "memory budget in MiB");
    cmd->add_option("--threads", common.threads, "scan worker threads");
  };
  auto add_input = [&](CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--input", input_path, "log file to read");
    if (required) opt->required();
    cmd->add_option("--format", format, "xes or csv")
        ->check(CLI::IsMember({"xes", "csv"}));
    cmd->add_option("--case-col", mapping.case_column, "CSV case column");
    cmd->add_option("--activity-col", mapping.activity_column,
                    "CSV activity column");
    cmd->add_option("--time-col", mapping.timestamp_column, "CSV timestamp column");
    cmd->add_option("--time-format", mapping.time_format,
                    "timestamp pattern (default iso8601)");
  };

  CLI::App* cmd_ingest = app.add_subcommand("ingest", "load a log into a store");
  add_store(cmd_ingest);
  add_input(cmd_ingest, true);
  cmd_ingest->add_option("--log-name", log_name,
                         "log node name (default: input stem)");

  CLI::App* cmd_validate =
      app.add_subcommand("validate", "check the soundness rules");
  add_store(cmd_validate, false);
  add_input(cmd_validate, false);

  CLI::App* cmd_dfg = app.add_subcommand("dfg", "compute the directly follows graph");
  add_store(cmd_dfg);
  cmd_dfg->add_option("--from", from_str, "window start (ISO-8601)");
  cmd_dfg->add_option("--to", to_str, "window end (ISO-8601)");
  cmd_dfg->add_option("--format", dfg_format, "matrix, edges or dot")
      ->check(CLI::IsMember({"matrix", "edges", "dot"}));
  cmd_dfg->add_option("--role", role, "role to compute as (default admin)");
  cmd_dfg->add_option("--policy", policy_path, "access policy file");
  cmd_dfg->add_option("--out", out_path, "write output here instead of stdout");

  CLI::App* cmd_bench =
      app.add_subcommand("bench", "accumulative dicing benchmark");
  add_store(cmd_bench);
  cmd_bench->add_option("--window-step", window_step, "window growth per row (1d, 12h, 30m)");
  cmd_bench->add_option("--repeat", repeat, "timed repeats per window");
  cmd_bench->add_option("--out", out_path, "write the CSV report here");

  CLI::App* cmd_generate =
      app.add_subcommand("generate", "write a deterministic synthetic log");
  cmd_generate->add_option("--traces", spec.traces, "trace count")->required();
  cmd_generate->add_option("--events-min", spec.events_min, "min events per trace");
  cmd_generate->add_option("--events-max", spec.events_max, "max events per trace");
  cmd_generate->add_option("--alphabet", spec.alphabet, "distinct activities");
  cmd_generate->add_option("--span", span, "arrival span (duration)");
  cmd_generate->add_option("--start", start_str, "first possible instant");
  cmd_generate->add_option("--seed", spec.seed, "random seed");
  cmd_generate->add_option("--format", format, "xes or csv")
      ->check(CLI::IsMember({"xes", "csv"}));
  cmd_generate->add_option("--out", out_path, "output file")->required();

  CLI::App* cmd_stats = app.add_subcommand("stats", "print store counts");
  add_store(cmd_stats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(cmd_ingest)) {
      std::ifstream in(input_path, std::ios::binary);
      if (!in) {
        std::cerr << "cannot open " << input_path << "\n";
        return kExitStore;
      }
      if (log_name.empty())
        log_name = std::filesystem::path(input_path).stem().string();
      evgr::GraphStore store = open_store(common);
      auto source = make_source(in, format, mapping);
      evgr::IngestStats stats = evgr::ingest(*source, store, log_name);
      std::cout << "traces=" << stats.traces << "\n"
                << "events=" << stats.events << "\n"
                << "activities=" << stats.activities << "\n";
      if (stats.repairs > 0) std::cout << "repairs=" << stats.repairs << "\n";
      return kExitOk;
    }

    if (app.got_subcommand(cmd_validate)) {
      if (common.store_dir.empty() == input_path.empty()) {
        std::cerr << "validate needs exactly one of --store or --input\n";
        return kExitUsage;
      }
      if (!common.store_dir.empty()) {
        evgr::GraphStore store = open_store(common);
        return print_report(store.load().validate_soundness());
      }
      std::ifstream in(input_path, std::ios::binary);
      if (!in) {
        std::cerr << "cannot open " << input_path << "\n";
        return kExitStore;
      }
      evgr::EventRepository repo;
      evgr::NodeId log =
          repo.add_log(std::filesystem::path(input_path).stem().string());
      auto source = make_source(in, format, mapping);
      while (auto record = source->next()) {
        evgr::NodeId trace = repo.add_trace(log, record->case_name);
        for (const evgr::EventInput& ev : record->events)
          repo.append_event(trace, ev.activity, ev.timestamp);
      }
      return print_report(repo.validate_soundness());
    }

    if (app.got_subcommand(cmd_dfg)) {
      evgr::DfgFilter filter;
      if (!from_str.empty()) filter.window.start = evgr::parse_iso8601(from_str);
      if (!to_str.empty()) filter.window.end = evgr::parse_iso8601(to_str);

      evgr::AccessPolicy policy;
      if (!policy_path.empty()) {
        std::ifstream in(policy_path);
        if (!in) {
          std::cerr << "cannot open " << policy_path << "\n";
          return kExitStore;
        }
        policy = evgr::load_policy(in);
      } else if (role != evgr::kAdminRole) {
        std::cerr << "--role needs --policy\n";
        return kExitUsage;
      }

      evgr::GraphStore store = open_store(common);
      evgr::DfgMatrix matrix = evgr::dfg_scan_as(store, filter, policy, role,
                                                 evgr::DfgOptions{common.threads});
      evgr::DfgExportFormat fmt = dfg_format == "matrix"
                                      ? evgr::DfgExportFormat::MatrixCsv
                                      : dfg_format == "edges"
                                            ? evgr::DfgExportFormat::EdgeCsv
                                            : evgr::DfgExportFormat::Dot;
      write_output(out_path, evgr::export_dfg(matrix, fmt));
      return kExitOk;
    }

    if (app.got_subcommand(cmd_bench)) {
      evgr::BenchOptions opts;
      opts.window_step_ms = evgr::parse_duration_ms(window_step);
      opts.repeat = repeat;
      opts.threads = common.threads;
      evgr::GraphStore store = open_store(common);
      evgr::BenchReport report = evgr::run_bench(store, opts);
      write_output(out_path, report.to_csv());
      return kExitOk;
    }

    if (app.got_subcommand(cmd_generate)) {
      try {
        spec.start = evgr::parse_iso8601(start_str);
        spec.span_ms = evgr::parse_duration_ms(span);
        spec.validate();
      } catch (const evgr::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
      }
      std::ofstream out(out_path, std::ios::binary);
      if (!out) {
        std::cerr << "cannot write " << out_path << "\n";
        return kExitStore;
      }
      evgr::write_synthetic_log(
          spec, format == "csv" ? evgr::LogFormat::Csv : evgr::LogFormat::Xes, out);
      return kExitOk;
    }

    if (app.got_subcommand(cmd_stats)) {
      evgr::GraphStore store = open_store(common);
      evgr::StoreStats s = store.stats();
      std::cout << "logs=" << s.logs << "\n"
                << "traces=" << s.traces << "\n"
                << "events=" << s.events << "\n"
                << "attributes=" << s.attributes << "\n"
                << "activities=" << s.activities << "\n"
                << "rel_log_trace=" << s.log_trace_edges << "\n"
                << "rel_trace_event=" << s.trace_event_edges << "\n"
                << "rel_event_event=" << s.event_event_edges << "\n"
                << "rel_event_attr=" << s.event_attr_edges << "\n";
      return kExitOk;
    }
  } catch (const evgr::Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitStore;
  }
  return kExitUsage;
}
