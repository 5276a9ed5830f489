#include "cce/remote.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace cce {

namespace {

// Posts a JSON document and returns the parsed JSON reply, retrying
// transient transport failures with exponential backoff.
nlohmann::json post_json(const RemoteEndpoint& endpoint, const std::string& path,
                         const nlohmann::json& body, ErrorCode unavailable) {
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);

    httplib::Headers headers;
    if (!endpoint.token_env.empty()) {
        if (const char* token = std::getenv(endpoint.token_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }

    std::string last_error;
    int delay_ms = endpoint.backoff_ms;
    int attempts = endpoint.attempts < 1 ? 1 : endpoint.attempts;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms *= 2;
        }
        httplib::Result res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::UnparsableResponse,
                        endpoint.base_url + path + " returned non-JSON body: " + e.what());
        }
    }
    throw Error(unavailable, endpoint.base_url + path + " unreachable after " +
                                 std::to_string(attempts) + " attempts (" + last_error + ")");
}

class RemoteClassifier : public ClassifierClient {
public:
    explicit RemoteClassifier(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    ClassifyResponse classify(const ClassifyRequest& request) override {
        return ClassifyResponse::from_json(post_json(endpoint_, "/classify", request.to_json(),
                                                     ErrorCode::ClassifierUnavailable));
    }

private:
    RemoteEndpoint endpoint_;
};

class RemoteGrounder : public GrounderClient {
public:
    explicit RemoteGrounder(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    GroundResponse ground(const GroundRequest& request) override {
        return GroundResponse::from_json(
            post_json(endpoint_, "/ground", request.to_json(), ErrorCode::GrounderUnavailable));
    }

private:
    RemoteEndpoint endpoint_;
};

class RemoteInpainter : public InpainterClient {
public:
    explicit RemoteInpainter(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    InpaintResponse inpaint(const InpaintRequest& request) override {
        return InpaintResponse::from_json(
            post_json(endpoint_, "/inpaint", request.to_json(), ErrorCode::InpainterUnavailable));
    }

private:
    RemoteEndpoint endpoint_;
};

class RemoteSelector : public SelectorClient {
public:
    explicit RemoteSelector(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    SelectResponse select(const SelectRequest& request) override {
        return SelectResponse::from_json(
            post_json(endpoint_, "/select", request.to_json(), ErrorCode::SelectorUnavailable));
    }

private:
    RemoteEndpoint endpoint_;
};

} // namespace

std::shared_ptr<ClassifierClient> make_remote_classifier(const RemoteEndpoint& endpoint) {
    return std::make_shared<RemoteClassifier>(endpoint);
}

std::shared_ptr<GrounderClient> make_remote_grounder(const RemoteEndpoint& endpoint) {
    return std::make_shared<RemoteGrounder>(endpoint);
}

std::shared_ptr<InpainterClient> make_remote_inpainter(const RemoteEndpoint& endpoint) {
    return std::make_shared<RemoteInpainter>(endpoint);
}

std::shared_ptr<SelectorClient> make_remote_selector(const RemoteEndpoint& endpoint) {
    return std::make_shared<RemoteSelector>(endpoint);
}

BackendBundle make_remote_backends(const RemoteEndpoints& endpoints) {
    BackendBundle bundle;
    bundle.contracts.classifier = make_remote_classifier(endpoints.classifier);
    bundle.contracts.grounder = make_remote_grounder(endpoints.grounder);
    bundle.contracts.inpainter = make_remote_inpainter(endpoints.inpainter);
    bundle.contracts.selector = make_remote_selector(endpoints.selector);
    std::string images_dir = endpoints.images_dir;
    bundle.source_payload = [images_dir](const ConceptAnnotation& a) {
        ImagePayload p;
        p.mode = "path";
        p.data = images_dir.empty() ? a.image_id : images_dir + "/" + a.image_id;
        return p;
    };
    return bundle;
}

} // namespace cce
