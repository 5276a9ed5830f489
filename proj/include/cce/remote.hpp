#pragma once

#include <string>

#include "cce/backends.hpp"
#include "cce/clients.hpp"
#include "cce/errors.hpp"

namespace cce {

// One remote service endpoint. The bearer token is read from the named
// environment variable at call time so credentials never sit in config files.
struct RemoteEndpoint {
    std::string base_url;   // e.g. http://127.0.0.1:8080
    std::string token_env;  // empty: no Authorization header
    int attempts = 3;
    int backoff_ms = 250;   // doubled after each failed attempt
};

struct RemoteEndpoints {
    RemoteEndpoint classifier;
    RemoteEndpoint grounder;
    RemoteEndpoint inpainter;
    RemoteEndpoint selector;
    std::string images_dir;  // source images resolve to <images_dir>/<image_id>
};

std::shared_ptr<ClassifierClient> make_remote_classifier(const RemoteEndpoint& endpoint);
std::shared_ptr<GrounderClient> make_remote_grounder(const RemoteEndpoint& endpoint);
std::shared_ptr<InpainterClient> make_remote_inpainter(const RemoteEndpoint& endpoint);
std::shared_ptr<SelectorClient> make_remote_selector(const RemoteEndpoint& endpoint);

BackendBundle make_remote_backends(const RemoteEndpoints& endpoints);

} // namespace cce
