#include <gtest/gtest.h>

#include <thread>

#include "frugal/oracle.hpp"
#include "support.hpp"

using namespace frugal;

TEST(CachedOracle, LabelsFromTruth) {
  Dataset truth = testing_support::table3();
  CachedOracle oracle(truth);
  EXPECT_EQ(oracle.label_count(), 0u);
  LabeledRow r = oracle.label(truth.blind(truth.rows()[0]));
  EXPECT_EQ(oracle.label_count(), 1u);
  EXPECT_EQ(r.source, OracleKind::cached);
  EXPECT_EQ(std::get<double>(r.row.cells[4]), 2130);
  EXPECT_EQ(std::get<double>(r.row.cells[5]), 24.6);
  EXPECT_EQ(std::get<double>(r.row.cells[6]), 40);
}

TEST(CachedOracle, RelabelIsFree) {
  Dataset truth = testing_support::table3();
  CachedOracle oracle(truth);
  LabeledRow a = oracle.label(truth.blind(truth.rows()[2]));
  LabeledRow b = oracle.label(truth.blind(truth.rows()[2]));
  EXPECT_EQ(a.row, b.row);
  EXPECT_EQ(oracle.label_count(), 1u);
  EXPECT_TRUE(oracle.is_labeled(2));
  EXPECT_FALSE(oracle.is_labeled(3));
}

TEST(CachedOracle, CountsDistinctRows) {
  Dataset truth = testing_support::table3();
  CachedOracle oracle(truth);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    oracle.label(truth.blind(truth.rows()[k]));
    oracle.label(truth.blind(truth.rows()[k / 2]));
    EXPECT_EQ(oracle.label_count(), k + 1);
  }
}

TEST(CachedOracle, Errors) {
  Dataset truth = testing_support::table3();
  CachedOracle oracle(truth);
  Row stranger = truth.rows()[0];
  stranger.id = 1000;
  EXPECT_THROW(oracle.label(stranger), OracleError);

  Dataset partial = truth.clone({truth.blind(truth.rows()[0])});
  CachedOracle hollow(partial);
  EXPECT_THROW(hollow.label(partial.rows()[0]), OracleError);
  EXPECT_EQ(hollow.label_count(), 0u);
}

TEST(CachedOracle, ConcurrentLabelsCountOnce) {
  Rng rng(5);
  Dataset truth = testing_support::random_dataset(rng, 200);
  CachedOracle oracle(truth);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&] {
      for (const auto& r : truth.rows()) oracle.label(truth.blind(r));
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(oracle.label_count(), truth.size());
}

TEST(InteractiveOracle, AnswerUnblocksLabel) {
  Dataset truth = testing_support::table3();
  InteractiveOracle oracle(truth.schema_ptr());
  LabeledRow got;
  std::thread worker([&] { got = oracle.label(truth.blind(truth.rows()[1]), {true, std::nullopt, 0, 5}); });
  auto req = oracle.wait_for_request();
  ASSERT_TRUE(req);
  EXPECT_EQ(req->row.id, 1u);
  EXPECT_TRUE(req->context.seed);
  EXPECT_EQ(oracle.answer(7, {1, 2, 3}), InteractiveOracle::Answer::conflict);
  EXPECT_EQ(oracle.answer(1, {2189, 18, 30}), InteractiveOracle::Answer::accepted);
  worker.join();
  EXPECT_EQ(got.row, truth.rows()[1]);
  EXPECT_EQ(got.source, OracleKind::interactive);
  EXPECT_EQ(oracle.label_count(), 1u);
  EXPECT_FALSE(oracle.pending());
  EXPECT_EQ(oracle.answer(1, {1, 2, 3}), InteractiveOracle::Answer::idle);
}

TEST(InteractiveOracle, WrongArityIsAnError) {
  Dataset truth = testing_support::table3();
  InteractiveOracle oracle(truth.schema_ptr());
  std::thread worker([&] { EXPECT_THROW(oracle.label(truth.blind(truth.rows()[0])), OracleError); });
  ASSERT_TRUE(oracle.wait_for_request());
  oracle.answer(0, {1, 2});
  worker.join();
  EXPECT_EQ(oracle.label_count(), 0u);
}

TEST(InteractiveOracle, CloseTerminatesWaitingLabel) {
  Dataset truth = testing_support::table3();
  InteractiveOracle oracle(truth.schema_ptr());
  std::thread worker([&] { EXPECT_THROW(oracle.label(truth.blind(truth.rows()[0])), SessionTerminated); });
  ASSERT_TRUE(oracle.wait_for_request());
  oracle.close();
  worker.join();
  EXPECT_TRUE(oracle.closed());
  EXPECT_EQ(oracle.answer(0, {1, 2, 3}), InteractiveOracle::Answer::closed);
  EXPECT_THROW(oracle.label(truth.rows()[3]), SessionTerminated);
}

TEST(InteractiveOracle, MarkDoneReleasesWaiters) {
  Dataset truth = testing_support::table3();
  InteractiveOracle oracle(truth.schema_ptr());
  std::thread t([&] { oracle.mark_done(); });
  EXPECT_FALSE(oracle.wait_for_request());
  t.join();
}
