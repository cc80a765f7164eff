#include "wbseg/http_service.hpp"

#include "httplib.h"
#include "wbseg/error.hpp"

namespace wbseg {

using nlohmann::json;

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::SessionBusy:
    case ErrorCode::NoSegmentationYet: return 409;
    case ErrorCode::IoFailure: return 500;
    default: return 400;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"error", std::string(code)}, {"message", message}});
}

// Runs a handler and maps engine errors to JSON error payloads.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, http_status_for(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "InvalidArgument", std::string("malformed JSON: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

std::size_t parse_index(const std::string& text, const char* what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(text, &pos);
    if (pos != text.size() || v < 0) throw std::invalid_argument(what);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad ") + what + " '" + text + "'");
  }
}

}  // namespace

HttpService::HttpService(SessionManager& sessions) : sessions_(sessions) {}

HttpService::~HttpService() { stop(); }

void HttpService::register_routes(httplib::Server& server) {
  const std::string sid = R"(/sessions/([0-9a-f]+))";

  server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto ct = req.get_header_value("Content-Type");
    std::string id;
    double threshold = 0.0;
    if (req.has_param("mask_threshold")) {
      const std::string text = req.get_param_value("mask_threshold");
      try {
        std::size_t pos = 0;
        threshold = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "bad mask_threshold '" + text + "'");
      }
    }
    if (ct.rfind("application/json", 0) == 0) {
      const json body = parse_body(req);
      if (!body.contains("path")) throw Error(ErrorCode::InvalidArgument, "expected {\"path\": ...}");
      MultiModalVolume vol;
      try {
        vol = load_volume(body.at("path").get<std::string>());
      } catch (const Error& e) {
        if (e.code() == ErrorCode::IoFailure) throw;
        throw Error(ErrorCode::MalformedVolume, std::string(to_string(e.code())) + ": " + e.what());
      }
      id = sessions_.create(std::move(vol), threshold);
    } else {
      id = sessions_.create_from_bytes(req.body, threshold);
    }
    const auto vol = sessions_.volume(id);
    send_json(res, 201,
              {{"id", id},
               {"dims", {vol->dims().w, vol->dims().h, vol->dims().d}},
               {"modalities", vol->modalities()}});
  }));

  server.Get(sid + "/strokes", guarded([this](const httplib::Request& req, httplib::Response& res) {
    res.status = 200;
    res.set_content(strokes_to_json(sessions_.strokes(req.matches[1])), "application/json");
  }));

  server.Post(sid + "/strokes", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const StrokeSet delta = parse_strokes_json(req.body);
    const StrokeSet all = sessions_.add_strokes(req.matches[1], delta);
    const auto counts = all.class_counts();
    send_json(res, 200, {{"count", all.size()}, {"class_counts", counts}});
  }));

  server.Delete(sid + "/strokes", guarded([this](const httplib::Request& req, httplib::Response& res) {
    sessions_.clear_strokes(req.matches[1]);
    send_json(res, 200, {{"count", 0}});
  }));

  server.Post(sid + "/segment", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const PipelineConfig config = PipelineConfig::from_json(parse_body(req));
    sessions_.start_segmentation(req.matches[1], config);
    send_json(res, 202, sessions_.status(req.matches[1]).to_json());
  }));

  server.Get(sid + "/status", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, sessions_.status(req.matches[1]).to_json());
  }));

  server.Get(sid + "/report", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, sessions_.report(req.matches[1])->to_json());
  }));

  server.Get(sid + "/labels", guarded([this](const httplib::Request& req, httplib::Response& res) {
    res.status = 200;
    res.set_content(serialize_labels(sessions_.report(req.matches[1])->labels), "application/octet-stream");
  }));

  server.Get(sid + "/slice", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const Axis axis = axis_from_string(req.has_param("axis") ? req.get_param_value("axis") : "axial");
    if (!req.has_param("index")) throw Error(ErrorCode::InvalidArgument, "missing 'index'");
    const std::size_t index = parse_index(req.get_param_value("index"), "index");
    const std::string modality = req.has_param("modality") ? req.get_param_value("modality") : "0";
    std::string png;
    if (modality == "overlay") {
      png = sessions_.overlay_png(id, axis, index);
    } else {
      const auto vol = sessions_.volume(id);
      std::size_t m = 0;
      const auto& names = vol->modalities();
      auto named = std::find(names.begin(), names.end(), modality);
      m = named != names.end() ? static_cast<std::size_t>(named - names.begin()) : parse_index(modality, "modality");
      png = sessions_.slice_png(id, axis, index, m);
    }
    res.status = 200;
    res.set_content(png, "image/png");
  }));

  server.Post(sid + "/metrics", guarded([this](const httplib::Request& req, httplib::Response& res) {
    LabelVolume truth;
    try {
      truth = parse_labels(req.body);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedVolume, std::string(to_string(e.code())) + ": " + e.what());
    }
    send_json(res, 200, sessions_.metrics(req.matches[1], truth).to_json());
  }));

  server.Delete(sid, guarded([this](const httplib::Request& req, httplib::Response& res) {
    if (!sessions_.remove(req.matches[1])) {
      throw Error(ErrorCode::UnknownSession, "unknown session '" + std::string(req.matches[1]) + "'");
    }
    send_json(res, 200, {{"deleted", true}});
  }));
}

bool HttpService::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  register_routes(*server_);
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    return port_ > 0;
  }
  port_ = port;
  return server_->bind_to_port(host, port);
}

void HttpService::serve() {
  if (!server_) throw Error(ErrorCode::InvalidArgument, "bind() before serve()");
  server_->listen_after_bind();
}

void HttpService::stop() {
  if (server_) server_->stop();
}

}  // namespace wbseg
