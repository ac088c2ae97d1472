#include "ddsrecon/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ddsrecon/capture.hpp"
#include "ddsrecon/encoding.hpp"
#include "ddsrecon/errors.hpp"
#include "ddsrecon/intersect.hpp"
#include "ddsrecon/netsim.hpp"
#include "ddsrecon/pdp.hpp"
#include "ddsrecon/permissions.hpp"
#include "ddsrecon/topology.hpp"

namespace ddsrecon::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write \"" + path + "\"");
  out << content;
}

// --------------------------------------------------------------------------
// Participant database file

ordered_json db_to_json(const cap::ParticipantDatabase& db,
                        const cap::LoadReport& report) {
  ordered_json doc;
  doc["participants"] = ordered_json::array();
  for (const auto& [guid, info] : db.participants()) {
    ordered_json p;
    p["guid"] = guid;
    p["subject"] = info.subject_name;
    p["endpoints"] = info.endpoints;
    p["first_seen"] = format_timestamp(info.first_seen);
    p["last_seen"] = format_timestamp(info.last_seen);
    p["permissions_b64"] = enc::base64_encode(info.canonical_document);
    doc["participants"].push_back(p);
  }
  doc["anomalies"] = ordered_json::array();
  for (const auto& a : report.anomalies)
    doc["anomalies"].push_back({{"record_index", a.record_index},
                                {"guid", a.guid},
                                {"detail", a.detail}});
  return doc;
}

cap::ParticipantDatabase db_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("database file is not valid JSON: ") + e.what());
  }
  std::vector<cap::CaptureRecord> records;
  try {
    for (const auto& p : doc.at("participants")) {
      for (const auto& endpoint : p.at("endpoints")) {
        cap::CaptureRecord r;
        r.timestamp = parse_timestamp(p.at("first_seen").get<std::string>());
        r.source_address = endpoint.get<std::string>();
        r.destination_address = "unknown:0";
        r.participant_guid = p.at("guid").get<std::string>();
        r.subject_name = p.at("subject").get<std::string>();
        r.permissions_document =
            enc::base64_decode(p.at("permissions_b64").get<std::string>());
        records.push_back(std::move(r));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed database file: ") + e.what());
  }
  cap::ParticipantDatabase db;
  cap::load_capture(records, db);
  return db;
}

topo::Phase2Mode parse_mode(const std::string& mode) {
  if (mode == "exact") return topo::Phase2Mode::ExactIntersection;
  if (mode == "fast") return topo::Phase2Mode::FastFnmatch;
  throw InputError("unknown phase-2 mode \"" + mode + "\" (exact|fast)");
}

ordered_json action_to_json(const perm::ActionRequest& act) {
  ordered_json j;
  j["verb"] = std::string(perm::to_string(act.verb));
  j["topic"] = act.topic;
  j["partition"] = act.partition;
  j["domain"] = act.domain_id;
  j["data_tags"] = ordered_json::array();
  for (const auto& t : act.data_tags)
    j["data_tags"].push_back({{"name", t.name}, {"value", t.value}});
  return j;
}

ordered_json witness_to_json(const isect::ActionPair& pair) {
  ordered_json j;
  j["publisher"] = action_to_json(pair.publisher_action);
  j["subscriber"] = action_to_json(pair.subscriber_action);
  return j;
}

ordered_json oracle_stats(const isect::EdgeOracle& oracle, std::size_t n) {
  ordered_json j;
  std::size_t exhaustive = n * (n > 0 ? n - 1 : 0);
  j["invocations"] = oracle.solver_invocations();
  j["cache_hits"] = oracle.cache_hits();
  j["exhaustive_pairs"] = exhaustive;
  if (oracle.solver_invocations() > 0 && exhaustive > 0)
    j["reduction_factor"] = static_cast<double>(exhaustive) /
                            static_cast<double>(oracle.solver_invocations());
  return j;
}

struct QueryContext {
  cap::ParticipantDatabase db;
  topo::HeuristicGraph graph;
  isect::EdgeOracle oracle;

  QueryContext(cap::ParticipantDatabase d, topo::Phase2Mode mode)
      : db(std::move(d)),
        graph(topo::build_heuristic_graph(db, mode)),
        oracle(db) {}
};

// --------------------------------------------------------------------------
// Subcommand bodies

int cmd_gen(const sim::Scenario& scenario, const std::string& out_dir,
            std::ostream& out) {
  fs::create_directories(out_dir);
  std::string scenario_path = (fs::path(out_dir) / "scenario.txt").string();
  std::string capture_path = (fs::path(out_dir) / "capture.txt").string();
  write_file(scenario_path, sim::save_scenario(scenario));
  std::string capture;
  for (const auto& r : sim::emit_capture(scenario)) capture += cap::to_line(r) + "\n";
  write_file(capture_path, capture);
  ordered_json result;
  result["scenario"] = scenario_path;
  result["capture"] = capture_path;
  result["participants"] = scenario.participants.size();
  out << result.dump(2) << "\n";
  return kOk;
}

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& codec,
               const std::string& out_path, std::ostream& out) {
  cap::ParticipantDatabase db;
  cap::LoadReport total;
  for (const std::string& path : inputs) {
    auto records = cap::decode_capture(read_file(path), codec);
    cap::LoadReport report = cap::load_capture(records, db);
    total.records_loaded += report.records_loaded;
    total.anomalies.insert(total.anomalies.end(), report.anomalies.begin(),
                           report.anomalies.end());
  }
  ordered_json doc = db_to_json(db, total);
  write_file(out_path, doc.dump(2) + "\n");
  ordered_json summary;
  summary["database"] = out_path;
  summary["participants"] = db.size();
  summary["records"] = total.records_loaded;
  summary["anomalies"] = doc["anomalies"];
  out << summary.dump(2) << "\n";
  return kOk;
}

int cmd_graph(const std::string& db_path, const std::string& mode,
              const std::string& format, const std::string& out_path,
              std::ostream& out) {
  cap::ParticipantDatabase db = db_from_json(read_file(db_path));
  topo::HeuristicGraph graph = topo::build_heuristic_graph(db, parse_mode(mode));
  std::string rendered;
  if (format == "json")
    rendered = topo::to_json(graph, db);
  else if (format == "dot")
    rendered = topo::to_dot(graph, db);
  else
    throw InputError("unknown graph format \"" + format + "\" (json|dot)");
  if (out_path.empty())
    out << rendered;
  else
    write_file(out_path, rendered);
  return kOk;
}

int cmd_query_path(QueryContext& ctx, const std::string& from,
                   const std::string& to, Timestamp at, std::ostream& out) {
  auto src = ctx.db.resolve(from);
  auto dst = ctx.db.resolve(to);
  auto result = topo::find_path(ctx.graph, ctx.oracle, src, dst, at);
  ordered_json j;
  j["query"] = "path";
  j["from"] = src;
  j["to"] = dst;
  j["at"] = format_timestamp(at);
  j["found"] = result.has_value();
  if (result) {
    j["nodes"] = ordered_json::array();
    j["labels"] = ordered_json::array();
    for (const auto& id : result->nodes) {
      j["nodes"].push_back(id);
      j["labels"].push_back(ctx.db.at(id).subject_name);
    }
    j["hops"] = result->edge_witnesses.size();
    j["witnesses"] = ordered_json::array();
    for (const auto& w : result->edge_witnesses)
      j["witnesses"].push_back(witness_to_json(w));
  }
  j["oracle"] = oracle_stats(ctx.oracle, ctx.graph.vertices.size());
  out << j.dump(2) << "\n";
  return result ? kOk : kNoResult;
}

int cmd_query_cut(QueryContext& ctx, const std::string& kind,
                  const std::string& from, const std::string& to, Timestamp at,
                  std::ostream& out) {
  topo::CutResult result;
  ordered_json j;
  j["query"] = kind;
  j["at"] = format_timestamp(at);
  if (kind == "cut") {
    auto src = ctx.db.resolve(from);
    auto dst = ctx.db.resolve(to);
    j["from"] = src;
    j["to"] = dst;
    result = topo::min_cut_between(ctx.graph, ctx.oracle, src, dst, at);
  } else if (kind == "isolate-src") {
    auto src = ctx.db.resolve(from);
    j["node"] = src;
    result = topo::isolate_source(ctx.graph, ctx.oracle, src, at);
  } else {
    auto dst = ctx.db.resolve(to);
    j["node"] = dst;
    result = topo::isolate_target(ctx.graph, ctx.oracle, dst, at);
  }
  j["no_vertex_cut"] = result.no_vertex_cut;
  j["certified"] = result.certified;
  if (!result.no_vertex_cut) {
    j["cut"] = result.cut_nodes;
    j["labels"] = ordered_json::array();
    for (const auto& id : result.cut_nodes)
      j["labels"].push_back(ctx.db.at(id).subject_name);
    j["size"] = result.cut_nodes.size();
  }
  j["oracle"] = oracle_stats(ctx.oracle, ctx.graph.vertices.size());
  out << j.dump(2) << "\n";
  return result.no_vertex_cut ? kNoResult : kOk;
}

int cmd_simulate(const std::string& scenario_path,
                 const std::vector<std::string>& remove, int rounds,
                 std::ostream& out) {
  sim::Scenario scenario = sim::load_scenario(read_file(scenario_path));
  std::set<std::string> removed(remove.begin(), remove.end());
  sim::DeliveryReport report = sim::simulate(scenario, removed, rounds);
  out << sim::report_lines(report);
  return kOk;
}

int cmd_diff_vendor(const std::vector<std::string>& files,
                    const std::string& variant_name, std::size_t budget,
                    std::ostream& out) {
  pdp::PdpVariant variant;
  if (variant_name == "swapped-fnmatch-args")
    variant = pdp::PdpVariant::SwappedFnmatchArgs;
  else if (variant_name == "skip-partition-check")
    variant = pdp::PdpVariant::SkipPartitionCheck;
  else if (variant_name == "compliant")
    variant = pdp::PdpVariant::Compliant;  // rejected by the search below
  else
    throw InputError("unknown variant \"" + variant_name + "\"");

  ordered_json j;
  j["variant"] = variant_name;
  j["witnesses"] = ordered_json::array();
  std::size_t found = 0;
  for (const std::string& path : files) {
    perm::PermissionsFile file = perm::parse_permissions(read_file(path));
    auto witness = pdp::differential_witness(file, variant, budget);
    if (!witness) continue;
    ++found;
    ordered_json w;
    w["file"] = path;
    w["action"] = action_to_json(witness->action);
    w["compliant"] = std::string(perm::to_string(witness->compliant_outcome));
    w["variant"] = std::string(perm::to_string(witness->variant_outcome));
    j["witnesses"].push_back(w);
  }
  j["files_checked"] = files.size();
  j["divergent_files"] = found;
  out << j.dump(2) << "\n";
  return found > 0 ? kOk : kNoResult;
}

int cmd_obfuscate(const std::string& key, const std::string& in_path,
                  const std::string& out_path, std::ostream& out) {
  perm::PermissionsFile file = perm::parse_permissions(read_file(in_path));
  perm::PermissionsFile obfuscated = perm::obfuscate_permissions(file, key);
  write_file(out_path, perm::serialize_permissions(obfuscated));
  ordered_json j;
  j["input"] = in_path;
  j["output"] = out_path;
  out << j.dump(2) << "\n";
  return kOk;
}

std::vector<std::string> expand_perm_inputs(const std::string& single,
                                            const std::string& dir) {
  std::vector<std::string> files;
  if (!single.empty()) files.push_back(single);
  if (!dir.empty()) {
    if (!fs::is_directory(dir)) throw InputError("not a directory: \"" + dir + "\"");
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ".xml") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw InputError("no permission files given");
  return files;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Secure DDS permission reconnaissance toolkit"};
  app.require_subcommand(1);
  int status = kOk;

  // gen
  auto* gen = app.add_subcommand("gen", "synthesize a scenario and its capture");
  gen->require_subcommand(1);
  struct {
    int rows = 6, cols = 6, nodes = 8;
    double edge_prob = 0.3;
    std::uint64_t seed = 0;
    std::string out_dir;
  } gen_opts;
  auto* gen_grid = gen->add_subcommand("grid", "2D grid of participants");
  gen_grid->add_option("--rows", gen_opts.rows)->check(CLI::PositiveNumber);
  gen_grid->add_option("--cols", gen_opts.cols)->check(CLI::PositiveNumber);
  gen_grid->add_option("--seed", gen_opts.seed)->required();
  gen_grid->add_option("--out-dir", gen_opts.out_dir)->required();
  gen_grid->callback([&] {
    status = cmd_gen(sim::generate_grid(gen_opts.rows, gen_opts.cols, gen_opts.seed),
                     gen_opts.out_dir, out);
  });
  auto* gen_random = gen->add_subcommand("random", "random directed intent");
  gen_random->add_option("--nodes", gen_opts.nodes)->check(CLI::PositiveNumber);
  gen_random->add_option("--edge-prob", gen_opts.edge_prob)
      ->check(CLI::Range(0.0, 1.0));
  gen_random->add_option("--seed", gen_opts.seed)->required();
  gen_random->add_option("--out-dir", gen_opts.out_dir)->required();
  gen_random->callback([&] {
    status = cmd_gen(
        sim::generate_random(gen_opts.nodes, gen_opts.edge_prob, gen_opts.seed),
        gen_opts.out_dir, out);
  });

  // ingest
  auto* ingest = app.add_subcommand("ingest", "capture files -> participant database");
  struct {
    std::vector<std::string> inputs;
    std::string codec = "capture-text";
    std::string out_path;
  } ingest_opts;
  ingest->add_option("inputs", ingest_opts.inputs, "capture files, or - for stdin")
      ->required();
  ingest->add_option("--codec", ingest_opts.codec);
  ingest->add_option("--out", ingest_opts.out_path)->required();
  ingest->callback([&] {
    status = cmd_ingest(ingest_opts.inputs, ingest_opts.codec,
                        ingest_opts.out_path, out);
  });

  // graph
  auto* graph = app.add_subcommand("graph", "build and export the heuristic graph");
  struct {
    std::string db, mode = "exact", format = "json", out_path;
  } graph_opts;
  graph->add_option("--db", graph_opts.db)->required();
  graph->add_option("--mode", graph_opts.mode, "exact|fast");
  graph->add_option("--format", graph_opts.format, "json|dot");
  graph->add_option("--out", graph_opts.out_path);
  graph->callback([&] {
    status = cmd_graph(graph_opts.db, graph_opts.mode, graph_opts.format,
                       graph_opts.out_path, out);
  });

  // query
  auto* query = app.add_subcommand("query", "reachability and cut queries");
  query->require_subcommand(1);
  struct {
    std::string db, from, to, node, mode = "exact";
    std::string at = format_timestamp(sim::kScenarioEvalTime);
  } q;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--db", q.db)->required();
    cmd->add_option("--at", q.at, "query time, ISO-8601 UTC");
    cmd->add_option("--mode", q.mode, "exact|fast");
  };
  auto* q_path = query->add_subcommand("path", "verified source→target path");
  add_common(q_path);
  q_path->add_option("--from", q.from)->required();
  q_path->add_option("--to", q.to)->required();
  q_path->callback([&] {
    QueryContext ctx(db_from_json(read_file(q.db)), parse_mode(q.mode));
    status = cmd_query_path(ctx, q.from, q.to, parse_timestamp(q.at), out);
  });
  auto* q_cut = query->add_subcommand("cut", "minimum vertex cut between two nodes");
  add_common(q_cut);
  q_cut->add_option("--from", q.from)->required();
  q_cut->add_option("--to", q.to)->required();
  q_cut->callback([&] {
    QueryContext ctx(db_from_json(read_file(q.db)), parse_mode(q.mode));
    status = cmd_query_cut(ctx, "cut", q.from, q.to, parse_timestamp(q.at), out);
  });
  auto* q_src = query->add_subcommand("isolate-src", "cut all flow out of a node");
  add_common(q_src);
  q_src->add_option("--node", q.node)->required();
  q_src->callback([&] {
    QueryContext ctx(db_from_json(read_file(q.db)), parse_mode(q.mode));
    status = cmd_query_cut(ctx, "isolate-src", q.node, "", parse_timestamp(q.at), out);
  });
  auto* q_dst = query->add_subcommand("isolate-dst", "cut all flow into a node");
  add_common(q_dst);
  q_dst->add_option("--node", q.node)->required();
  q_dst->callback([&] {
    QueryContext ctx(db_from_json(read_file(q.db)), parse_mode(q.mode));
    status = cmd_query_cut(ctx, "isolate-dst", "", q.node, parse_timestamp(q.at), out);
  });

  // simulate
  auto* simulate = app.add_subcommand("simulate", "KeepAlive propagation run");
  struct {
    std::string scenario;
    std::vector<std::string> remove;
    int rounds = 20;
  } sim_opts;
  simulate->add_option("--scenario", sim_opts.scenario)->required();
  simulate->add_option("--rounds", sim_opts.rounds)->check(CLI::PositiveNumber);
  simulate->add_option("--remove", sim_opts.remove, "participant ids to drop");
  simulate->callback([&] {
    status = cmd_simulate(sim_opts.scenario, sim_opts.remove, sim_opts.rounds, out);
  });

  // diff-vendor
  auto* diff = app.add_subcommand("diff-vendor",
                                  "search for spec/vendor-variant divergences");
  struct {
    std::string perm, dir, variant;
    std::size_t budget = 10000;
  } diff_opts;
  diff->add_option("--perm", diff_opts.perm, "one permissions XML file");
  diff->add_option("--dir", diff_opts.dir, "directory of *.xml files");
  diff->add_option("--variant", diff_opts.variant,
                   "swapped-fnmatch-args|skip-partition-check")
      ->required();
  diff->add_option("--budget", diff_opts.budget);
  diff->callback([&] {
    status = cmd_diff_vendor(expand_perm_inputs(diff_opts.perm, diff_opts.dir),
                             diff_opts.variant, diff_opts.budget, out);
  });

  // obfuscate
  auto* obfuscate = app.add_subcommand("obfuscate", "keyed-digest permission transform");
  struct {
    std::string key, in_path, out_path;
  } obf_opts;
  obfuscate->add_option("--key", obf_opts.key)->required();
  obfuscate->add_option("--in", obf_opts.in_path)->required();
  obfuscate->add_option("--out", obf_opts.out_path)->required();
  obfuscate->callback([&] {
    status = cmd_obfuscate(obf_opts.key, obf_opts.in_path, obf_opts.out_path, out);
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    err << app.help();
    return kInputError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::logic_error& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return status;
}

}  // namespace ddsrecon::cli
