#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace evgr;
using namespace evgr::test;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

CliResult run_cli(const TempDir& dir, const std::string& args) {
  fs::path out_file = dir / "cli_stdout.txt";
  std::string command = std::string(EVGR_CLI_PATH) + " " + args + " > " +
                        out_file.string() + " 2> " + (dir / "cli_stderr.txt").string();
  int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_file);
  return result;
}

// fixture store under dir/st, fixture XES at dir/fixture.xes
void setup_fixture(const TempDir& dir) {
  spit(dir / "fixture.xes", fixture_xes());
  CliResult r = run_cli(dir, "ingest --input " + (dir / "fixture.xes").string() +
                                 " --format xes --store " + (dir / "st").string() +
                                 " --log-name l1");
  REQUIRE(r.exit_code == 0);
}

}  // namespace

TEST_CASE("ingest prints the stats and enforces log uniqueness") {
  TempDir dir;
  spit(dir / "fixture.xes", fixture_xes());
  std::string flags = "ingest --input " + (dir / "fixture.xes").string() +
                      " --format xes --store " + (dir / "st").string() +
                      " --log-name l1";
  CliResult first = run_cli(dir, flags);
  CHECK(first.exit_code == 0);
  CHECK(first.out == "traces=2\nevents=6\nactivities=4\n");

  CliResult again = run_cli(dir, flags);
  CHECK(again.exit_code == 2);  // DuplicateLog

  CliResult usage = run_cli(dir, "ingest --store " + (dir / "st2").string());
  CHECK(usage.exit_code == 64);  // --input missing
}

TEST_CASE("stats reports every node and relation count") {
  TempDir dir;
  setup_fixture(dir);
  CliResult r = run_cli(dir, "stats --store " + (dir / "st").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out ==
        "logs=1\ntraces=2\nevents=6\nattributes=4\nactivities=4\n"
        "rel_log_trace=2\nrel_trace_event=6\nrel_event_event=4\nrel_event_attr=6\n");
}

TEST_CASE("dfg prints the worked-example matrix") {
  TempDir dir;
  setup_fixture(dir);
  CliResult r = run_cli(dir, "dfg --store " + (dir / "st").string() + " --format matrix");
  CHECK(r.exit_code == 0);
  CHECK(r.out ==
        ",a1,a2,a3,a4\n"
        "a1,0,1,0,0\n"
        "a2,0,0,2,0\n"
        "a3,0,0,0,1\n"
        "a4,0,0,0,0\n");

  CliResult edges = run_cli(dir, "dfg --store " + (dir / "st").string() + " --format edges");
  CHECK(edges.out ==
        "dfg_from,dfg_to,dfg_freq\na1,a2,1\na2,a3,2\na3,a4,1\n");

  // byte-identical across runs
  CliResult rerun = run_cli(dir, "dfg --store " + (dir / "st").string() + " --format matrix");
  CHECK(rerun.out == r.out);
}

TEST_CASE("dfg window flags validate their order") {
  TempDir dir;
  setup_fixture(dir);
  CliResult r = run_cli(dir, "dfg --store " + (dir / "st").string() +
                                 " --from 2020-01-02T00:00:00Z --to 2020-01-01T00:00:00Z");
  CHECK(r.exit_code == 64);
}

TEST_CASE("dfg role handling") {
  TempDir dir;
  setup_fixture(dir);
  spit(dir / "policy.txt",
       "role analyst\n  aggregate-dfg\n  read-prop Attribute.concept_name\n"
       "role blocked\n  read Event\n");

  CliResult allowed = run_cli(dir, "dfg --store " + (dir / "st").string() +
                                       " --role analyst --policy " +
                                       (dir / "policy.txt").string());
  CHECK(allowed.exit_code == 0);
  CHECK(allowed.out.find("a2,a3") != std::string::npos);

  CliResult denied = run_cli(dir, "dfg --store " + (dir / "st").string() +
                                      " --role blocked --policy " +
                                      (dir / "policy.txt").string());
  CHECK(denied.exit_code == 77);

  CliResult no_policy =
      run_cli(dir, "dfg --store " + (dir / "st").string() + " --role analyst");
  CHECK(no_policy.exit_code == 64);

  CliResult unknown = run_cli(dir, "dfg --store " + (dir / "st").string() +
                                       " --role ghost --policy " +
                                       (dir / "policy.txt").string());
  CHECK(unknown.exit_code == 64);
}

TEST_CASE("validate reports soundness") {
  TempDir dir;
  setup_fixture(dir);
  CliResult sound = run_cli(dir, "validate --store " + (dir / "st").string());
  CHECK(sound.exit_code == 0);
  CHECK(sound.out == "sound\n");

  // splice in a dangling trace record: node id 13, case string id 0
  {
    std::ofstream f(dir / "st" / "nodes_trace.evgr",
                    std::ios::binary | std::ios::app);
    const unsigned char record[12] = {13, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    f.write(reinterpret_cast<const char*>(record), sizeof(record));
  }
  CliResult broken = run_cli(dir, "validate --store " + (dir / "st").string());
  CHECK(broken.exit_code == 1);
  CHECK(broken.out.find("rule=1") != std::string::npos);

  CliResult empty = run_cli(dir, "validate --store " + (dir / "empty").string());
  CHECK(empty.exit_code == 0);
  CHECK(empty.out == "sound\n");
}

TEST_CASE("validate accepts an input file directly") {
  TempDir dir;
  spit(dir / "fixture.xes", fixture_xes());
  CliResult r = run_cli(dir, "validate --input " + (dir / "fixture.xes").string() +
                                 " --format xes");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "sound\n");
}

TEST_CASE("bench emits one row per accumulative window") {
  TempDir dir;
  setup_fixture(dir);
  CliResult r = run_cli(dir, "bench --store " + (dir / "st").string() +
                                 " --window-step 1d --repeat 2");
  CHECK(r.exit_code == 0);
  std::istringstream lines(r.out);
  std::string header, row, extra;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == "window_end,events,dfg_ms,peak_mem_bytes");
  CHECK(row.find("2020-01-02T00:00:00.000Z,6,") == 0);  // all six events inside
  CHECK_FALSE(std::getline(lines, extra));

  CliResult empty = run_cli(dir, "bench --store " + (dir / "none").string() +
                                     " --window-step 1d");
  CHECK(empty.exit_code == 2);
}

TEST_CASE("csv ingest honors the column mapping flags") {
  TempDir dir;
  spit(dir / "log.csv",
       "when,who,what\n"
       "2020~01~01 05.00.00,c9,x\n"
       "2020~01~01 06.30.00,c9,y\n");
  CliResult r = run_cli(dir, "ingest --input " + (dir / "log.csv").string() +
                                 " --format csv --store " + (dir / "st").string() +
                                 " --log-name odd --case-col who --activity-col what"
                                 " --time-col when --time-format '%Y~%m~%d %H.%M.%S'");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "traces=1\nevents=2\nactivities=2\n");

  CliResult edges =
      run_cli(dir, "dfg --store " + (dir / "st").string() + " --format edges");
  CHECK(edges.out == "dfg_from,dfg_to,dfg_freq\nx,y,1\n");

  CliResult missing = run_cli(dir, "ingest --input " + (dir / "log.csv").string() +
                                       " --format csv --store " +
                                       (dir / "st2").string() + " --log-name odd2");
  CHECK(missing.exit_code == 1);  // default columns absent from this header
}

TEST_CASE("generate is deterministic and validates bounds") {
  TempDir dir;
  std::string flags = "generate --traces 20 --events-min 2 --events-max 5"
                      " --alphabet 6 --seed 11 --format xes --out ";
  CHECK(run_cli(dir, flags + (dir / "a.xes").string()).exit_code == 0);
  CHECK(run_cli(dir, flags + (dir / "b.xes").string()).exit_code == 0);
  CHECK(slurp(dir / "a.xes") == slurp(dir / "b.xes"));

  CliResult bad = run_cli(dir, "generate --traces 5 --events-min 9 --events-max 2"
                               " --seed 1 --out " + (dir / "c.xes").string());
  CHECK(bad.exit_code == 64);

  // generated logs ingest with an alphabet-bounded activity count
  CliResult ingest_r = run_cli(dir, "ingest --input " + (dir / "a.xes").string() +
                                        " --format xes --store " +
                                        (dir / "st").string() + " --log-name g");
  CHECK(ingest_r.exit_code == 0);
  CHECK(ingest_r.out.find("traces=20\n") != std::string::npos);
}
