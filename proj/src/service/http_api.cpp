#include "neuroscope/service/http_api.hpp"

#include <charconv>
#include <map>

#include "httplib.h"
#include "neuroscope/saliency/render.hpp"
#include "neuroscope/service/cases.hpp"
#include "neuroscope/service/likert.hpp"

namespace neuroscope {

namespace fs = std::filesystem;

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, Json{{"error", message}});
}

std::optional<double> parse_threshold(const httplib::Request& req, std::string& error) {
  if (!req.has_param("threshold")) return kDefaultThresholdFrac;
  const std::string s = req.get_param_value("threshold");
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    error = "threshold must be a number, got '" + s + "'";
    return std::nullopt;
  }
  try {
    check_threshold(v);
  } catch (const UsageError& e) {
    error = e.what();
    return std::nullopt;
  }
  return v;
}

std::string format_threshold(double t) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, t);
  return std::string(buf, r.ptr);
}

}  // namespace

struct ReviewService::Impl {
  RunDir run;
  LikertStore store;
  // Immutable after construction, so handlers read without locking.
  std::map<std::string, BundleData> cases;
  std::map<std::string, std::string> static_png;  // "<id>/<name>" -> bytes
  httplib::Server server;
  int port = 0;

  explicit Impl(const RunDir& r) : run(r), store(r.scores()) {}

  const BundleData* find(const std::string& id) const {
    const auto it = cases.find(id);
    return it == cases.end() ? nullptr : &it->second;
  }

  Json with_urls(const BundleData& d) const {
    Json j = d.bundle.to_json();
    const std::string base = "/api/cases/" + d.bundle.id;
    j["image_url"] = base + "/image.png";
    j["overlay_url"] = base + "/overlay.png";
    j["saliency_url"] = base + "/saliency?threshold=" + format_threshold(d.bundle.threshold);
    j["scores_url"] = base + "/scores";
    return j;
  }

  Json summary(const BundleData& d) const {
    const CaseBundle& b = d.bundle;
    const auto fired = triggered_rule(b.rules.results);
    Json j{{"id", b.id},
           {"predicted_class", b.predicted_class},
           {"predicted_label", label_name(b.predicted_class)},
           {"url", "/api/cases/" + b.id}};
    j["true_label"] = b.true_label ? Json(*b.true_label) : Json(nullptr);
    j["dice"] = b.overlap ? Json(b.overlap->dice) : Json(nullptr);
    j["iou"] = b.overlap ? Json(b.overlap->iou) : Json(nullptr);
    j["rule"] = fired ? Json(to_string(fired->rule_id)) : Json(nullptr);
    return j;
  }

  void routes();
};

void ReviewService::Impl::routes() {
  server.Get("/api/cases", [this](const httplib::Request&, httplib::Response& res) {
    Json a = Json::array();
    for (const auto& [id, d] : cases) a.push_back(summary(d));
    send_json(res, 200, a);
  });

  server.Get(R"(/api/cases/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const BundleData* d = find(req.matches[1]);
    if (!d) return send_error(res, 404, "unknown case '" + std::string(req.matches[1]) + "'");
    send_json(res, 200, with_urls(*d));
  });

  server.Get(R"(/api/cases/([^/]+)/saliency)", [this](const httplib::Request& req, httplib::Response& res) {
    const BundleData* d = find(req.matches[1]);
    if (!d) return send_error(res, 404, "unknown case '" + std::string(req.matches[1]) + "'");
    std::string err;
    const auto t = parse_threshold(req, err);
    if (!t) return send_error(res, 422, err);
    const ThresholdScores sc = score_threshold(d->saliency, d->image.width, d->image.height, d->mask, *t);
    Json j = sc.to_json();
    j["id"] = d->bundle.id;
    j["png_url"] = "/api/cases/" + d->bundle.id + "/saliency.png?threshold=" + format_threshold(*t);
    send_json(res, 200, j);
  });

  server.Get(R"(/api/cases/([^/]+)/(image|overlay|saliency)\.png)",
             [this](const httplib::Request& req, httplib::Response& res) {
               const BundleData* d = find(req.matches[1]);
               if (!d) return send_error(res, 404, "unknown case '" + std::string(req.matches[1]) + "'");
               const std::string kind = req.matches[2];
               if (kind != "saliency") {
                 const auto it = static_png.find(d->bundle.id + "/" + kind);
                 res.status = 200;
                 res.set_content(it->second, "image/png");
                 return;
               }
               std::string err;
               const auto t = parse_threshold(req, err);
               if (!t) return send_error(res, 422, err);
               const ThresholdScores sc = score_threshold(d->saliency, d->image.width, d->image.height, d->mask, *t);
               res.status = 200;
               res.set_content(encode_png(render_overlay(d->image, d->saliency, sc.mask)), "image/png");
             });

  server.Post(R"(/api/cases/([^/]+)/scores)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (!find(id)) return send_error(res, 404, "unknown case '" + id + "'");
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      return send_error(res, 400, std::string("malformed JSON: ") + e.what());
    }
    if (!body.is_object()) return send_error(res, 422, "score body must be a JSON object");
    if (body.contains("case_id") && body.at("case_id") != id)
      return send_error(res, 422, "case_id in body does not match the URL");
    body["case_id"] = id;
    LikertRecord rec;
    try {
      rec = LikertRecord::from_json(body);
    } catch (const UsageError& e) {
      return send_error(res, 422, e.what());
    }
    if (rec.timestamp.empty()) rec.timestamp = utc_timestamp();
    try {
      store.append(rec);
    } catch (const std::exception& e) {
      return send_error(res, 500, e.what());
    }
    send_json(res, 200, Json{{"status", "stored"}, {"record", rec.to_json()}});
  });

  server.Get("/api/report", [this](const httplib::Request&, httplib::Response& res) {
    try {
      send_json(res, 200, aggregate_likert(store.load()).to_json());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    send_error(res, 500, msg);
  });
}

ReviewService::ReviewService(const RunDir& run, std::optional<fs::path> ui_dir) : impl_(std::make_unique<Impl>(run)) {
  for (const auto& id : list_case_ids(run)) {
    const auto b = load_bundle(run, id);
    if (!b) continue;
    BundleData d = load_bundle_data(run, *b);
    impl_->static_png[id + "/image"] = read_text_file(run.root() / b->image_path);
    impl_->static_png[id + "/overlay"] = read_text_file(run.root() / b->overlay_path);
    impl_->cases.emplace(id, std::move(d));
  }
  impl_->routes();
  // httplib's default adds SO_REUSEPORT, which would let a second server share a busy port.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (ui_dir) {
    if (!fs::is_directory(*ui_dir)) throw UsageError("UI directory " + ui_dir->string() + " does not exist");
    impl_->server.set_mount_point("/", ui_dir->string());
  }
}

ReviewService::~ReviewService() { stop(); }

bool ReviewService::bind(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
    return impl_->port > 0;
  }
  if (!impl_->server.bind_to_port(host, port)) return false;
  impl_->port = port;
  return true;
}

int ReviewService::port() const { return impl_->port; }

void ReviewService::serve() { impl_->server.listen_after_bind(); }

void ReviewService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace neuroscope
