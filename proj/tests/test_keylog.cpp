#include <gtest/gtest.h>

#include <keytrace/keylog.hpp>
#include <keytrace/synthgen.hpp>

#include "support.hpp"

using namespace keytrace;

TEST(ParseLogStream, SingleRecord) {
  auto c = parse_log_stream(
      R"({"user":"u1","task":"0.1","key":"ㄱ","code":"KeyR","action":"down","t":100})");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.event_count(), 1u);
  const auto& e = c.logs()[0].events[0];
  EXPECT_EQ(e.key_value, "ㄱ");
  EXPECT_EQ(e.key_code, "KeyR");
  EXPECT_TRUE(e.is_down());
  EXPECT_EQ(e.timestamp_ms, 100);
}

TEST(ParseLogStream, EmptyStream) {
  EXPECT_TRUE(parse_log_stream("").empty());
  EXPECT_TRUE(parse_log_stream("\n  \n").empty());
}

TEST(ParseLogStream, UnknownActionNamesLineAndField) {
  const std::string text =
      "{\"user\":\"u1\",\"task\":\"0.1\",\"key\":\"a\",\"code\":\"KeyA\",\"action\":\"down\",\"t\":1}\n"
      "{\"user\":\"u1\",\"task\":\"0.1\",\"key\":\"a\",\"code\":\"KeyA\",\"action\":\"hold\",\"t\":2}\n";
  try {
    parse_log_stream(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.field(), "action");
    EXPECT_NE(std::string(e.what()).find("unknown action"), std::string::npos);
  }
}

TEST(ParseLogStream, RejectsBadRecords) {
  auto fails_on = [](const std::string& line, const std::string& field) {
    try {
      parse_log_stream(line);
    } catch (const ParseError& e) {
      return e.field() == field;
    }
    return false;
  };
  EXPECT_TRUE(fails_on(R"({"user":"u1","task":"3.1","key":"a","code":"KeyA","action":"down","t":1})", "task"));
  EXPECT_TRUE(fails_on(R"({"user":"u1","task":"0.7","key":"a","code":"KeyA","action":"down","t":1})", "task"));
  EXPECT_TRUE(fails_on(R"({"user":"u1","task":"0.1","key":"a","action":"down","t":1})", "code"));
  EXPECT_TRUE(fails_on(R"({"user":"u1","task":"0.1","key":"a","code":"KeyA","action":"down","t":"x"})", "t"));
  EXPECT_TRUE(fails_on(R"({"user":"u1","task":"0.1","key":"a","code":"KeyA","action":"down","t":-5})", "t"));
  EXPECT_TRUE(fails_on(R"({"user":"u1","task":"0.1","key":"a","code":"KeyA","action":"down","t":1,"x":2})", "x"));
  EXPECT_TRUE(fails_on("not json", "<record>"));
}

TEST(ParseLogStream, DecreasingTimestampAndDuplicate) {
  const std::string a = R"({"user":"u1","task":"0.1","key":"a","code":"KeyA","action":"down","t":5})";
  const std::string b = R"({"user":"u1","task":"0.1","key":"a","code":"KeyA","action":"up","t":4})";
  EXPECT_THROW(parse_log_stream(a + "\n" + b), ParseError);
  EXPECT_THROW(parse_log_stream(a + "\n" + a), ParseError);
}

TEST(ParseLogStream, FractionalTimestampsRoundHalfUp) {
  auto c = parse_log_stream(
      R"({"user":"u1","task":"0.1","key":"a","code":"KeyA","action":"down","t":10.5})");
  EXPECT_EQ(c.logs()[0].events[0].timestamp_ms, 11);
}

TEST(WriteLogStream, EmptyCorpus) { EXPECT_EQ(write_log_stream(Corpus{}), ""); }

TEST(WriteLogStream, Table2SixLinesInOrder) {
  const auto text = read_file(kt_test::fixture("table2.jsonl"));
  const auto corpus = parse_log_stream(text);
  const auto out = write_log_stream(corpus);
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 6);
  EXPECT_EQ(out, text);
}

TEST(WriteLogStream, SyntheticRoundTrip) {
  const auto profile = synth::generate_profile(11, 0);
  Corpus c;
  auto log = synth::generate_session(profile, {Scenario::BonaFide, 1});
  log.events.resize(std::min<std::size_t>(log.events.size(), 1000));
  ASSERT_EQ(log.events.size(), 1000u);
  c.add(log);
  c.add(synth::generate_session(profile, {Scenario::Transcribed, 6}));
  EXPECT_EQ(parse_log_stream(write_log_stream(c)), c);
}

TEST(TaskId, ParseAndRender) {
  for (const auto& t : all_tasks()) EXPECT_EQ(TaskId::parse(t.str()), t);
  EXPECT_EQ(all_tasks().size(), 18u);
  EXPECT_FALSE(TaskId::try_parse("1.0"));
  EXPECT_FALSE(TaskId::try_parse("11"));
  EXPECT_THROW(TaskId::parse("x.y"), Error);
}

TEST(TaskCognition, BloomOrder) {
  EXPECT_EQ(task_cognition(TaskId::parse("1.3")), (CognitiveTag{CognitiveProcess::Apply, CognitiveLevel::Low}));
  EXPECT_EQ(task_cognition(TaskId::parse("0.4")),
            (CognitiveTag{CognitiveProcess::Analyze, CognitiveLevel::High}));
  EXPECT_EQ(task_cognition(TaskId::parse("2.1")),
            (CognitiveTag{CognitiveProcess::Remember, CognitiveLevel::Low}));
  EXPECT_EQ(task_cognition(TaskId::parse("2.6")).process, CognitiveProcess::Create);
}

TEST(Corpus, RejectsDuplicateLog) {
  Corpus c;
  c.add(kt_test::make_log({}));
  EXPECT_THROW(c.add(kt_test::make_log({})), Error);
  EXPECT_NE(c.find("u1", {}), nullptr);
  EXPECT_EQ(c.find("u2", {}), nullptr);
}

TEST(Scenario, IndexMapping) {
  for (auto s : kScenarios) {
    EXPECT_EQ(scenario_from_index(class_index(s)), s);
    EXPECT_EQ(parse_scenario(scenario_name(s)), s);
  }
  EXPECT_THROW(scenario_from_index(3), Error);
}
