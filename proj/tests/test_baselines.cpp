#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fauno/baselines.hpp"
#include "fauno/errors.hpp"
#include "oracle_helpers.hpp"

using namespace fauno;

namespace {

Observation obs_with(NodeId self, int q_len, int q_cap,
                     std::vector<std::tuple<NodeId, int, int>> neighbors,
                     bool task_present = true) {
  Observation o;
  o.node = self;
  o.queue_len = q_len;
  o.queue_cap = q_cap;
  o.cores = 1;
  o.freq = 1e6;
  o.tx_power = 40.0;
  o.task.present = task_present;
  o.action_mask.assign(neighbors.size() + 1, 0);
  o.action_mask[0] = 1;
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    auto [id, len, cap] = neighbors[k];
    NeighborView v;
    v.id = id;
    v.heard = len >= 0;
    v.snapshot.node = id;
    v.snapshot.queue_len = len;
    v.snapshot.queue_cap = cap;
    o.neighbors.push_back(v);
    o.action_mask[k + 1] = task_present ? 1 : 0;
  }
  return o;
}

double rel_err(double a, double b) {
  // max(1,.) denominator: relative for large gradients, absolute for the
  // near-zero ones where central differences are all roundoff.
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

TEST_CASE("least queue: ratio comparison, ties, lone node, purity") {
  // self 2/10 = 0.2 beats neighbor 1/4 = 0.25
  auto o = obs_with(3, 2, 10, {{7, 1, 4}});
  CHECK(least_queue_action(o).choice == 0);

  // equal ratios: the smallest node id wins
  auto tie = obs_with(5, 2, 10, {{2, 1, 5}, {9, 1, 5}});
  // self 0.2, both neighbors 0.2 -> node 2 (neighbor index 1)
  CHECK(least_queue_action(tie).choice == 1);

  auto lone = obs_with(0, 9, 10, {});
  CHECK(least_queue_action(lone).choice == 0);

  auto idle = obs_with(0, 0, 10, {{1, 0, 10}}, false);
  CHECK(least_queue_action(idle).choice == 0);  // nothing to move

  // unheard neighbors are not candidates
  auto cold = obs_with(0, 9, 10, {{1, -1, 10}});
  CHECK(least_queue_action(cold).choice == 0);

  // pure function: identical observation, identical action
  auto again = obs_with(3, 2, 10, {{7, 1, 4}});
  CHECK(least_queue_action(again).choice == least_queue_action(o).choice);

  // clearly shorter neighbor queue attracts the task
  auto busy = obs_with(4, 9, 10, {{6, 1, 10}});
  CHECK(least_queue_action(busy).choice == 1);
}

TEST_CASE("dueling combination: collapse, shift invariance, identity") {
  Rng rng(1);
  auto params = DuelingParams::make(6, 4, rng);
  std::vector<double> obs(6);
  for (auto& x : obs) x = rng.uniform(0.0, 1.0);
  const std::vector<std::uint8_t> mask{1, 1, 1, 0};

  // zero advantage head: Q == V for all unmasked actions
  auto zeroed = params;
  for (auto* t : zeroed.adv_head.tensors()) std::fill(t->begin(), t->end(), 0.0);
  const double v = zeroed.value_head.forward(zeroed.trunk.forward(obs))[0];
  const auto q0 = dueling_q(zeroed, obs, mask);
  for (std::size_t k = 0; k < 3; ++k) CHECK(q0[k] == doctest::Approx(v).epsilon(1e-12));
  CHECK(std::isinf(q0[3]));
  CHECK(q0[3] < 0.0);

  // adding a constant to every advantage leaves Q unchanged
  auto shifted = params;
  for (auto& b : shifted.adv_head.layers().back().b) b += 3.7;
  const auto q1 = dueling_q(params, obs, mask);
  const auto q2 = dueling_q(shifted, obs, mask);
  for (std::size_t k = 0; k < 3; ++k) CHECK(q1[k] == doctest::Approx(q2[k]).epsilon(1e-9));

  // Q(a) - Q(b) equals A(a) - A(b) over unmasked actions
  const auto h = params.trunk.forward(obs);
  const auto adv = params.adv_head.forward(h);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      CHECK(q1[a] - q1[b] == doctest::Approx(adv[a] - adv[b]).epsilon(1e-9));
    }
  }

  // randomized check against the straight-line oracle
  Rng orng(2);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(6);
    for (auto& e : x) e = orng.uniform(-1.0, 1.0);
    std::vector<std::uint8_t> m(4, 1);
    if (orng.uniform() < 0.5) m[static_cast<std::size_t>(orng.uniform_int(0, 3))] = 0;
    const auto th = params.trunk.forward(x);
    const auto vv = params.value_head.forward(th)[0];
    const auto aa = params.adv_head.forward(th);
    const auto want = oracle::dueling_combine(vv, aa, m);
    const auto got = dueling_q(params, x, m);
    for (std::size_t k = 0; k < 4; ++k) {
      if (!m[k]) {
        CHECK(std::isinf(got[k]));
      } else {
        CHECK(oracle::close(got[k], want[k], 1e-9));
      }
    }
  }
}

TEST_CASE("dqn loss: terminal target, gamma zero, gradient check") {
  Rng rng(3);
  auto online = DuelingParams::make(5, 3, rng);
  auto target = DuelingParams::make(5, 3, rng);

  DqnTransition tr;
  tr.obs = {0.1, 0.5, 0.3, 0.7, 0.2};
  tr.mask = {1, 1, 1};
  tr.action = 2;
  tr.reward = 1.5;
  tr.next_obs = {0.4, 0.1, 0.9, 0.0, 0.6};
  tr.next_mask = {1, 1, 1};
  tr.done = true;

  const auto q = dueling_q(online, tr.obs, tr.mask);
  auto out = dqn_loss(online, target, {&tr}, 0.9);
  const double want = (q[2] - 1.5) * (q[2] - 1.5);
  CHECK(out.loss == doctest::Approx(want).epsilon(1e-12));

  // gamma = 0 makes every target just the reward
  DqnTransition alive = tr;
  alive.done = false;
  auto out0 = dqn_loss(online, target, {&alive}, 0.0);
  CHECK(out0.loss == doctest::Approx(want).epsilon(1e-12));

  // analytic gradient vs central differences
  auto eval = [&]() { return dqn_loss(online, target, {&alive}, 0.9).loss; };
  auto grads = dqn_loss(online, target, {&alive}, 0.9);
  const double h = 1e-6;
  double max_err = 0.0;
  auto check_part = [&](Mlp& part, const MlpGrad& grad) {
    for (std::size_t l = 0; l < part.layers().size(); ++l) {
      auto& layer = part.layers()[l];
      for (std::size_t j = 0; j < layer.w.size(); j += 11) {
        const double saved = layer.w[j];
        layer.w[j] = saved + h;
        const double up = eval();
        layer.w[j] = saved - h;
        const double down = eval();
        layer.w[j] = saved;
        max_err = std::max(max_err, rel_err(grad.dw[l][j], (up - down) / (2 * h)));
      }
    }
  };
  check_part(online.trunk, grads.grad.trunk);
  check_part(online.value_head, grads.grad.value_head);
  check_part(online.adv_head, grads.grad.adv_head);
  CHECK(max_err < 1e-5);
}

TEST_CASE("single-transition overfit drives the TD loss below 1e-4") {
  Rng rng(4);
  DqnConfig cfg;
  cfg.lr = 3e-3;  // small net, fixed point: a hotter rate converges quickly
  DqnAgent agent(4, 2, cfg, 17);
  DqnTransition tr;
  tr.obs = {0.2, 0.8, 0.5, 0.1};
  tr.mask = {1, 1};
  tr.action = 0;
  tr.reward = 2.0;
  tr.next_obs = {0.3, 0.3, 0.3, 0.3};
  tr.next_mask = {1, 1};
  tr.done = true;
  double loss = 1e9;
  for (int i = 0; i < 500; ++i) loss = agent.train_on({&tr});
  CHECK(loss < 1e-4);
}

TEST_CASE("fedavg: fixed point, midpoint, weighted example, convex hull") {
  Rng rng(5);
  Mlp a = Mlp::make({2, 2}, Act::kIdentity, Act::kIdentity, rng);
  Mlp b = Mlp::make({2, 2}, Act::kIdentity, Act::kIdentity, rng);

  const auto same = fedavg_round(std::vector<const Mlp*>{&a, &a, &a}, {1.0, 1.0, 1.0});
  for (std::size_t t = 0; t < same.tensors().size(); ++t) {
    for (std::size_t j = 0; j < same.tensors()[t]->size(); ++j) {
      CHECK((*same.tensors()[t])[j] == doctest::Approx((*a.tensors()[t])[j]).epsilon(1e-15));
    }
  }

  const auto mid = fedavg_round(std::vector<const Mlp*>{&a, &b}, {1.0, 1.0});
  for (std::size_t t = 0; t < mid.tensors().size(); ++t) {
    for (std::size_t j = 0; j < mid.tensors()[t]->size(); ++j) {
      const double want = 0.5 * ((*a.tensors()[t])[j] + (*b.tensors()[t])[j]);
      CHECK((*mid.tensors()[t])[j] == doctest::Approx(want).epsilon(1e-12));
    }
  }

  // three 2-parameter models with weights 1,2,3
  Mlp m1 = Mlp::make({1, 1}, Act::kIdentity, Act::kIdentity, rng);
  Mlp m2 = m1, m3 = m1;
  m1.layers()[0].w = {1.0};
  m1.layers()[0].b = {10.0};
  m2.layers()[0].w = {2.0};
  m2.layers()[0].b = {20.0};
  m3.layers()[0].w = {4.0};
  m3.layers()[0].b = {-5.0};
  const auto avg = fedavg_round(std::vector<const Mlp*>{&m1, &m2, &m3}, {1.0, 2.0, 3.0});
  CHECK(std::fabs(avg.layers()[0].w[0] - (1.0 + 4.0 + 12.0) / 6.0) < 1e-12);
  CHECK(std::fabs(avg.layers()[0].b[0] - (10.0 + 40.0 - 15.0) / 6.0) < 1e-12);

  // convex hull: every averaged parameter sits within the input extremes
  Rng hull_rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    Mlp x = Mlp::make({3, 2}, Act::kIdentity, Act::kIdentity, hull_rng);
    Mlp y = Mlp::make({3, 2}, Act::kIdentity, Act::kIdentity, hull_rng);
    Mlp z = Mlp::make({3, 2}, Act::kIdentity, Act::kIdentity, hull_rng);
    std::vector<double> w{hull_rng.uniform(0.0, 3.0), hull_rng.uniform(0.0, 3.0),
                          hull_rng.uniform(0.1, 3.0)};
    const auto avg2 = fedavg_round(std::vector<const Mlp*>{&x, &y, &z}, w);
    for (std::size_t t = 0; t < avg2.tensors().size(); ++t) {
      for (std::size_t j = 0; j < avg2.tensors()[t]->size(); ++j) {
        const double lo = std::min({(*x.tensors()[t])[j], (*y.tensors()[t])[j],
                                    (*z.tensors()[t])[j]});
        const double hi = std::max({(*x.tensors()[t])[j], (*y.tensors()[t])[j],
                                    (*z.tensors()[t])[j]});
        CHECK((*avg2.tensors()[t])[j] >= lo - 1e-12);
        CHECK((*avg2.tensors()[t])[j] <= hi + 1e-12);
      }
    }
  }

  Mlp wrong = Mlp::make({1, 2}, Act::kIdentity, Act::kIdentity, rng);
  CHECK_THROWS_AS(fedavg_round(std::vector<const Mlp*>{&m1, &wrong}, {1.0, 1.0}),
                  ProtocolError);
  CHECK_THROWS_AS(fedavg_round(std::vector<const Mlp*>{&m1, &m2}, {0.0, 0.0}),
                  ProtocolError);
}

TEST_CASE("round barrier blocks training until the broadcast lands") {
  DqnConfig cfg;
  cfg.warmup = 1;
  cfg.minibatch = 1;
  cfg.round_period = 4;
  DqnAgent agent(3, 2, cfg, 5);
  Observation o;
  o.features = {0.1, 0.2, 0.3};
  o.action_mask = {1, 1};
  o.task.present = true;

  for (int s = 0; s < 4; ++s) {
    const auto a = agent.act(o);
    agent.observe_transition(o, a, -1.0, o, false);
    if (!agent.wants_round()) agent.maybe_train();
  }
  CHECK(agent.wants_round());
  const auto trained_before = agent.train_steps();
  agent.mark_round_started();
  CHECK(agent.in_round_barrier());
  agent.maybe_train();
  agent.maybe_train();
  CHECK(agent.train_steps() == trained_before);  // barrier holds
  agent.finish_round(agent.online());
  agent.maybe_train();
  CHECK(agent.train_steps() == trained_before + 1);
}

TEST_CASE("synchronous round: all uploads gate the aggregate, audit is ordered") {
  DeviceProfile p;
  p.name = "n";
  p.cores = 1;
  p.freq = 1e6;
  p.queue_cap = 10;
  p.tx_power_dbm = 40.0;
  p.hosts_agent = true;
  std::vector<TopologyNode> nodes{{0, p, 0.0, 0.0}, {1, p, 1.0, 0.0}};
  Topology topo(std::move(nodes), {{0, 1}}, LinkDefaults{}, 0);
  FlTransport transport(FlTransport::multi_hop_delay(topo, 10.0));

  Rng rng(6);
  auto model0 = DuelingParams::make(3, 2, rng);
  auto model1 = DuelingParams::make(3, 2, rng);
  ScofFederation fed(topo, transport, model0.param_count());

  fed.upload(0, model0, 0);
  fed.on_tick(0);  // only one of two: the round must wait
  CHECK(fed.rounds_completed() == 0);
  fed.upload(1, model1, 0);
  Tick t = 0;
  while (fed.rounds_completed() == 0 && t < 50) fed.on_tick(++t);
  CHECK(fed.rounds_completed() == 1);

  std::optional<DuelingParams> got0, got1;
  for (Tick tick = t; tick < t + 50 && (!got0 || !got1); ++tick) {
    if (!got0) got0 = fed.poll_round_result(0, tick);
    if (!got1) got1 = fed.poll_round_result(1, tick);
  }
  REQUIRE(got0.has_value());
  REQUIRE(got1.has_value());

  // round average equals the equal-weight fedavg of the uploads
  const auto want = fedavg_round(std::vector<const DuelingParams*>{&model0, &model1},
                                 {1.0, 1.0});
  const auto wt = want.tensors();
  const auto gt = got0->tensors();
  for (std::size_t i = 0; i < wt.size(); ++i) {
    for (std::size_t j = 0; j < wt[i]->size(); ++j) {
      CHECK((*gt[i])[j] == doctest::Approx((*wt[i])[j]).epsilon(1e-12));
    }
  }

  // audit: submits precede the aggregate which precedes broadcast and adopts
  int submit_hi = -1, aggregate_at = -1, broadcast_at = -1, adopt_lo = 1 << 30;
  const auto& audit = fed.audit();
  for (int i = 0; i < static_cast<int>(audit.size()); ++i) {
    if (audit[static_cast<std::size_t>(i)].event == "submit") submit_hi = i;
    if (audit[static_cast<std::size_t>(i)].event == "aggregate") aggregate_at = i;
    if (audit[static_cast<std::size_t>(i)].event == "broadcast") broadcast_at = i;
    if (audit[static_cast<std::size_t>(i)].event == "adopt") adopt_lo = std::min(adopt_lo, i);
  }
  CHECK(submit_hi < aggregate_at);
  CHECK(aggregate_at < broadcast_at);
  CHECK(broadcast_at < adopt_lo);
}
