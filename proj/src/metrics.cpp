#include "fauno/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fauno/errors.hpp"

namespace fauno {

using json = nlohmann::json;

Aggregate aggregate_of(const std::vector<double>& xs) {
  Aggregate a;
  a.n = static_cast<int>(xs.size());
  if (xs.empty()) return a;
  for (double x : xs) a.mean += x;
  a.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double var = 0.0;
    for (double x : xs) var += (x - a.mean) * (x - a.mean);
    a.stdev = std::sqrt(var / static_cast<double>(xs.size() - 1));
  }
  return a;
}

EpisodeMetrics compute_metrics(const std::vector<Event>& events) {
  if (events.empty() || events.back().kind != EventKind::kEpisodeEnd) {
    throw IntegrityError("compute_metrics: log does not end with episode_end");
  }
  EpisodeMetrics m;
  double response_sum = 0.0;
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::kCreated: ++m.created; break;
      case EventKind::kCompleted:
        ++m.completed;
        response_sum += static_cast<double>(e.detail);
        break;
      case EventKind::kDropQueueFull: ++m.drops_queue; break;
      case EventKind::kDropDeadline: ++m.drops_deadline; break;
      default: break;
    }
  }
  if (events.back().detail != m.created) {
    throw IntegrityError("compute_metrics: truncated log (created " +
                         std::to_string(m.created) + " != recorded " +
                         std::to_string(events.back().detail) + ")");
  }
  m.finished_ratio =
      m.created > 0 ? static_cast<double>(m.completed) / static_cast<double>(m.created)
                    : 0.0;
  if (m.completed > 0) {
    m.avg_response_ticks = response_sum / static_cast<double>(m.completed);
  }
  return m;
}

std::string EpisodeMetrics::to_json() const {
  json doc;
  doc["episode"] = episode;
  doc["created"] = created;
  doc["completed"] = completed;
  doc["finished_ratio"] = finished_ratio;
  if (avg_response_ticks) {
    doc["avg_response_ticks"] = *avg_response_ticks;
  } else {
    doc["avg_response_ticks"] = nullptr;
  }
  doc["drops_queue"] = drops_queue;
  doc["drops_deadline"] = drops_deadline;
  json rewards = json::object();
  for (const auto& [node, r] : mean_reward_per_agent) {
    rewards[std::to_string(node)] = r;
  }
  doc["reward_per_agent"] = rewards;
  return doc.dump();
}

void MetricsReport::finalize() {
  total_created = total_completed = total_drops_queue = total_drops_deadline = 0;
  std::vector<double> ratios, responses, rewards;
  for (const auto& e : episodes) {
    total_created += e.created;
    total_completed += e.completed;
    total_drops_queue += e.drops_queue;
    total_drops_deadline += e.drops_deadline;
    ratios.push_back(e.finished_ratio);
    if (e.avg_response_ticks) responses.push_back(*e.avg_response_ticks);
    for (const auto& [node, r] : e.mean_reward_per_agent) rewards.push_back(r);
  }
  finished_ratio = aggregate_of(ratios);
  avg_response = aggregate_of(responses);
  mean_reward = aggregate_of(rewards).mean;
}

std::string MetricsReport::to_json() const {
  json doc;
  doc["algorithm"] = algorithm;
  doc["topology"] = topology_label;
  doc["lambda"] = lambda;
  doc["seed"] = seed;
  doc["totals"] = {{"created", total_created},
                   {"completed", total_completed},
                   {"drops_queue", total_drops_queue},
                   {"drops_deadline", total_drops_deadline}};
  doc["finished_ratio"] = {{"mean", finished_ratio.mean},
                           {"stdev", finished_ratio.stdev},
                           {"n", finished_ratio.n}};
  doc["avg_response_ticks"] = {{"mean", avg_response.mean},
                               {"stdev", avg_response.stdev},
                               {"n", avg_response.n}};
  doc["mean_reward"] = mean_reward;
  doc["federation"] = {{"submissions", fed.submissions},
                       {"replacements", fed.replacements},
                       {"rejections_stale", fed.rejections_stale},
                       {"aggregations", fed.aggregations},
                       {"broadcasts", fed.broadcasts}};
  doc["episodes"] = json::array();
  for (const auto& e : episodes) doc["episodes"].push_back(json::parse(e.to_json()));
  return doc.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("report parse: ") + e.what());
  }
  MetricsReport r;
  r.algorithm = doc.at("algorithm").get<std::string>();
  r.topology_label = doc.at("topology").get<std::string>();
  r.lambda = doc.at("lambda").get<double>();
  r.seed = doc.at("seed").get<std::uint64_t>();
  for (const auto& je : doc.at("episodes")) {
    EpisodeMetrics e;
    e.episode = je.at("episode").get<int>();
    e.created = je.at("created").get<std::int64_t>();
    e.completed = je.at("completed").get<std::int64_t>();
    e.finished_ratio = je.at("finished_ratio").get<double>();
    if (!je.at("avg_response_ticks").is_null()) {
      e.avg_response_ticks = je.at("avg_response_ticks").get<double>();
    }
    e.drops_queue = je.at("drops_queue").get<std::int64_t>();
    e.drops_deadline = je.at("drops_deadline").get<std::int64_t>();
    for (const auto& [key, value] : je.at("reward_per_agent").items()) {
      e.mean_reward_per_agent[std::stoi(key)] = value.get<double>();
    }
    r.episodes.push_back(std::move(e));
  }
  const auto& jf = doc.at("federation");
  r.fed.submissions = jf.at("submissions").get<std::int64_t>();
  r.fed.replacements = jf.at("replacements").get<std::int64_t>();
  r.fed.rejections_stale = jf.at("rejections_stale").get<std::int64_t>();
  r.fed.aggregations = jf.at("aggregations").get<std::int64_t>();
  r.fed.broadcasts = jf.at("broadcasts").get<std::int64_t>();
  r.finalize();
  return r;
}

std::string MetricsReport::episodes_csv() const {
  std::ostringstream out;
  out << "episode,created,completed,finished_ratio,avg_response_ticks,"
         "drops_queue,drops_deadline,mean_reward\n";
  for (const auto& e : episodes) {
    double reward_sum = 0.0;
    for (const auto& [node, r] : e.mean_reward_per_agent) reward_sum += r;
    const double mean_reward =
        e.mean_reward_per_agent.empty()
            ? 0.0
            : reward_sum / static_cast<double>(e.mean_reward_per_agent.size());
    out << e.episode << ',' << e.created << ',' << e.completed << ','
        << e.finished_ratio << ',';
    if (e.avg_response_ticks) {
      out << *e.avg_response_ticks;
    } else {
      out << "NA";
    }
    out << ',' << e.drops_queue << ',' << e.drops_deadline << ',' << mean_reward << '\n';
  }
  return out.str();
}

std::string MetricsReport::long_format_csv() const {
  std::ostringstream out;
  out << "episode,metric,value\n";
  for (const auto& e : episodes) {
    out << e.episode << ",finished_ratio," << e.finished_ratio << '\n';
    if (e.avg_response_ticks) {
      out << e.episode << ",avg_response_ticks," << *e.avg_response_ticks << '\n';
    }
    out << e.episode << ",drops_queue," << e.drops_queue << '\n';
    out << e.episode << ",drops_deadline," << e.drops_deadline << '\n';
  }
  return out.str();
}

std::string render_table(const std::vector<MetricsReport>& reports) {
  // Group by (algorithm, topology), columns by lambda; cells aggregate seeds.
  struct Cell {
    std::vector<double> ratios;
    std::vector<double> responses;
  };
  std::map<std::pair<std::string, std::string>, std::map<double, Cell>> groups;
  std::set<double> lambdas;
  for (const auto& r : reports) {
    auto& cell = groups[{r.algorithm, r.topology_label}][r.lambda];
    cell.ratios.push_back(r.finished_ratio.mean);
    if (r.avg_response.n > 0) cell.responses.push_back(r.avg_response.mean);
    lambdas.insert(r.lambda);
  }
  std::ostringstream out;
  auto print_metric = [&](const char* title, bool use_ratio) {
    out << title << '\n';
    out << std::left << std::setw(24) << "algorithm/topology";
    for (double l : lambdas) {
      std::ostringstream head;
      head << "lambda=" << l;
      out << std::setw(22) << head.str();
    }
    out << '\n';
    for (const auto& [key, cells] : groups) {
      out << std::left << std::setw(24) << (key.first + " " + key.second);
      for (double l : lambdas) {
        auto it = cells.find(l);
        if (it == cells.end()) {
          out << std::setw(22) << "-";
          continue;
        }
        const auto agg = aggregate_of(use_ratio ? it->second.ratios : it->second.responses);
        std::ostringstream cell;
        if (agg.n == 0) {
          cell << "-";
        } else {
          cell << std::fixed << std::setprecision(use_ratio ? 3 : 2) << agg.mean << "+/-"
               << agg.stdev;
        }
        out << std::setw(22) << cell.str();
      }
      out << '\n';
    }
    out << '\n';
  };
  print_metric("Finished tasks (ratio of created)", true);
  print_metric("Response time (ticks)", false);
  return out.str();
}

}  // namespace fauno
