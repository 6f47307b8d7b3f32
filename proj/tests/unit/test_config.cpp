#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "glrc/config.hpp"
#include "glrc/error.hpp"
#include "glrc/metrics_log.hpp"

using namespace glrc;
namespace fs = std::filesystem;

TEST_SUITE("config") {

TEST_CASE("parses every section") {
  const auto c = parse_config(R"(
# comment
[data]
interactions = /data/x.tsv
train_ratio = 0.8
valid_ratio = 0.1
test_ratio = 0.1
[model]
dim = 16
teacher_layers = 3
student_layers = 4
average_layers = true
[loss]
lambda1 = 0.5
tau2 = 0.25
epsilon = 0.1
[train]
mode = distill
seed = 7
learning_rate = 0.01
epochs = 12
batch_t2 = 64
disable_l3 = yes
[output]
dir = /tmp/run
)");
  CHECK(c.interactions == "/data/x.tsv");
  CHECK(c.ratios.train == 0.8);
  CHECK(c.dim == 16);
  CHECK(c.teacher_layers == 3);
  CHECK(c.student_layers == 4);
  CHECK(c.average_layers);
  CHECK(c.weights.lambda1 == 0.5);
  CHECK(c.weights.tau2 == 0.25);
  CHECK(c.weights.epsilon == 0.1);
  CHECK(c.seed == 7);
  CHECK(c.weights.max_epochs == 12);
  CHECK(c.batch_t2 == 64);
  CHECK(c.ablation.disable_l3);
  CHECK(c.output_dir == "/tmp/run");
}

TEST_CASE("rejects unknown keys, stray keys and bad values") {
  CHECK_THROWS_AS(parse_config("[model]\ndepth = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nonsense]\ndim = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("dim = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\ndim = three\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\ndim = -2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[loss]\ntau1 = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nmode = gcn\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\naverage_layers = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model\n"), ConfigError);
}

TEST_CASE("relative paths resolve against the config directory") {
  const auto c = parse_config("[data]\nsplit_dir = splits\n[output]\ndir = out\n", "/etc/glrc");
  CHECK(fs::path(c.split_dir) == fs::path("/etc/glrc/splits"));
  CHECK(fs::path(c.output_dir) == fs::path("/etc/glrc/out"));
}

TEST_CASE("rendering round trips and drives the hash") {
  const auto c = parse_config("[model]\ndim = 8\n[loss]\nlambda3 = 0.3\n[train]\nseed = 5\n");
  const auto text = render_config(c);
  CHECK(render_config(parse_config(text)) == text);
  CHECK(config_hash(c) == config_hash(parse_config(text)));
  CHECK(config_hash(c).size() == 16);
  auto d = c;
  d.seed = 6;
  CHECK(config_hash(c) != config_hash(d));
}

TEST_CASE("load_config reports a missing file") {
  CHECK_THROWS_AS(load_config("/nonexistent/glrc.ini"), ConfigError);
}

TEST_CASE("metrics log round trip") {
  const auto path = fs::temp_directory_path() / "glrc_test_metrics" / "m.jsonl";
  std::vector<EpochRecord> records(2);
  records[0].epoch = 1;
  records[0].total = 1.5;
  records[0].l2 = 0.25;
  records[1].epoch = 2;
  records[1].recall20 = 0.4;
  records[1].ndcg20 = 0.3;
  write_metrics_log(path, records);
  const auto back = read_metrics_log(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].total == 1.5);
  CHECK(back[0].l2 == 0.25);
  CHECK_FALSE(back[0].recall20.has_value());
  CHECK(*back[1].recall20 == 0.4);
  CHECK(epoch_record_json(records[0]).find("\"recall20\":null") != std::string::npos);
}

}

TEST_SUITE("config") {

TEST_CASE("shipped configs parse and the defaults file matches the built-in defaults") {
  const fs::path dir = GLRC_CONFIG_DIR;
  auto defaults = load_config(dir / "defaults.ini");
  RunConfig builtin;
  builtin.interactions = defaults.interactions;
  builtin.output_dir = defaults.output_dir;
  CHECK(render_config(defaults) == render_config(builtin));
  CHECK_NOTHROW(load_config(dir / "blocks4.ini"));
}

}
