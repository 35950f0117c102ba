#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "coregame/service.hpp"
#include "coregame/simulator.hpp"

using namespace coregame;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::vector<CourseGraph> load_courses(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("course_") && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<CourseGraph> out;
  for (const auto& f : files) out.push_back(CourseGraph::load(f));
  return out;
}

int simulate(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
             const std::filesystem::path& out, std::optional<std::size_t> restart_after) {
  auto config = CohortConfig::load(config_path);
  if (seed) config.seed = *seed;
  RunOptions options;
  options.restart_after = restart_after;
  auto result = run_cohort(config, options);

  std::filesystem::create_directories(out);
  write_text_file(out / "logs.csv", result.logs_csv);
  write_text_file(out / "evaluations.csv", result.evaluations_csv);
  write_text_file(out / "journal.jsonl", journal_to_jsonl(result.journal));
  Json summary{{"seed", config.seed},
               {"cohort", result.summary.to_json()},
               {"evaluation", result.report},
               {"surfaced_elements", result.surfaced_elements},
               {"uncovered_elements", result.uncovered_elements},
               {"liveness_failures", result.liveness_failures},
               {"replay_consistent", result.replay_consistent}};
  write_text_file(out / "summary.json", summary.dump(2) + "\n");

  std::cout << "participants " << result.summary.n << ", completed " << result.summary.completion_count
            << ", responses " << result.summary.response_count << ", journal entries " << result.journal.size()
            << "\n";
  if (!result.invariants_hold()) {
    for (const auto& f : result.liveness_failures) std::cerr << "liveness: " << f << "\n";
    for (const auto& e : result.uncovered_elements) std::cerr << "element never surfaced: " << e << "\n";
    if (!result.replay_consistent) std::cerr << "replay did not reproduce the final state\n";
    return 1;
  }
  return 0;
}

int replay_log(const std::filesystem::path& log, const std::filesystem::path& data) {
  auto journal = journal_from_jsonl(read_text_file(log));
  auto courses = load_courses(data);
  auto engine = replay(journal, courses);
  Json out{{"entries", journal.size()}, {"courses", Json::object()}};
  for (const auto& id : engine->course_ids()) {
    out["courses"][id] = {{"learners", engine->learners(id).size()},
                          {"attempts", engine->attempt_log(id).size()},
                          {"evaluations", engine->evaluations(id).size()}};
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int serve(ServiceConfig config) {
  Service service(config);
  HttpServer server(service);
  const int port = server.bind(config.host, config.port);
  if (port < 0) {
    std::cerr << "cannot bind " << config.host << ":" << config.port << "\n";
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on " << config.host << ":" << port << std::endl;
  server.listen_after_bind();
  g_server = nullptr;
  return 0;
}

int derive(const std::filesystem::path& tallies_path, const std::filesystem::path& config_path, bool check) {
  const auto& catalog = ElementCatalog::standard();
  auto tallies = load_tallies_csv(tallies_path, catalog);
  auto config = DerivationConfig::load(config_path, catalog);
  auto mapping = derive_mapping(tallies, config, catalog);
  std::cout << mapping.to_json().dump(2) << "\n";
  if (check && !(mapping == deployed_mapping())) {
    std::cerr << "derived mapping differs from the deployed mapping\n";
    return 1;
  }
  return 0;
}

int stats(const std::filesystem::path& evaluations) {
  auto responses = evaluations_from_csv(read_text_file(evaluations));
  std::cout << stats_report(responses).dump(2) << "\n";
  return 0;
}

int assess(const std::string& letters) {
  const auto& instrument = Instrument::standard();
  if (letters.size() != instrument.items().size()) {
    throw Error(ErrorCode::Validation,
                "expected " + std::to_string(instrument.items().size()) + " answers, got " +
                    std::to_string(letters.size()),
                "answers");
  }
  AssessmentResponse response;
  response.learner_id = "cli";
  for (std::size_t i = 0; i < letters.size(); ++i) {
    response.answers[instrument.items()[i].item_id] = option_from_string(std::string(1, letters[i]));
  }
  const auto core = determine_cognitive_core(response, instrument);
  std::cout << Json{{"core", to_string(core)}, {"active_elements", deployed_mapping().at(core)}}.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coregame: personality-driven gamification engine"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Run a scripted learner cohort");
  std::filesystem::path sim_config = data_file("cohort_default.json");
  std::optional<std::uint64_t> sim_seed;
  std::filesystem::path sim_out = "sim_out";
  std::optional<std::size_t> sim_restart;
  sim->add_option("--config", sim_config, "Cohort config JSON")->check(CLI::ExistingFile);
  sim->add_option("--seed", sim_seed, "Overrides the config seed");
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_option("--restart-after", sim_restart, "Replay the journal into a fresh engine after N agents");

  auto* rep = app.add_subcommand("replay", "Rebuild engine state from a journal");
  std::filesystem::path rep_log;
  std::filesystem::path rep_data = data_dir();
  rep->add_option("--log", rep_log, "journal.jsonl")->required()->check(CLI::ExistingFile);
  rep->add_option("--data", rep_data, "Directory with course_*.json")->check(CLI::ExistingDirectory);

  auto* srv = app.add_subcommand("serve", "Serve the HTTP API");
  std::string srv_bind;
  std::string srv_storage;
  srv->add_option("--bind", srv_bind, "host:port (default from COREGAME_BIND or 127.0.0.1:8080)");
  srv->add_option("--storage", srv_storage, "Storage directory (default from COREGAME_STORAGE)");

  auto* der = app.add_subcommand("derive-mapping", "Derive core to element tuples from expert tallies");
  std::filesystem::path der_tallies = data_file("expert_tallies.csv");
  std::filesystem::path der_config = data_file("derivation_config.json");
  bool der_check = false;
  der->add_option("--tallies", der_tallies)->check(CLI::ExistingFile);
  der->add_option("--config", der_config)->check(CLI::ExistingFile);
  der->add_flag("--check", der_check, "Fail unless the result equals the deployed mapping");

  auto* st = app.add_subcommand("stats", "Evaluation statistics from an evaluations CSV");
  std::filesystem::path st_file;
  st->add_option("--evaluations", st_file)->required()->check(CLI::ExistingFile);

  auto* as = app.add_subcommand("assess", "Score a 14-answer assessment, e.g. ABBAABA BAABABB");
  std::string as_answers;
  as->add_option("answers", as_answers, "A/B letters in item order")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return simulate(sim_config, sim_seed, sim_out, sim_restart);
    if (*rep) return replay_log(rep_log, rep_data);
    if (*srv) {
      auto config = ServiceConfig::from_env();
      if (!srv_bind.empty()) {
        const auto colon = srv_bind.rfind(':');
        if (colon == std::string::npos) throw Error(ErrorCode::Configuration, "--bind needs host:port", "bind");
        config.host = srv_bind.substr(0, colon);
        config.port = std::stoi(srv_bind.substr(colon + 1));
      }
      if (!srv_storage.empty()) config.storage = srv_storage;
      return serve(config);
    }
    if (*der) return derive(der_tallies, der_config, der_check);
    if (*st) return stats(st_file);
    if (*as) {
      std::erase(as_answers, ' ');
      return assess(as_answers);
    }
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what();
    if (!e.field().empty()) std::cerr << " (" << e.field() << ")";
    std::cerr << "\n";
    return 2;
  }
  return 0;
}
