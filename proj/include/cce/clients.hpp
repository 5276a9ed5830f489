#pragma once

#include <memory>

#include "cce/wire.hpp"

namespace cce {

// Service contracts the pipeline runs against. Mock and remote
// implementations satisfy identical wire schemas and are interchangeable.

class ClassifierClient {
public:
    virtual ~ClassifierClient() = default;
    virtual ClassifyResponse classify(const ClassifyRequest& request) = 0;
};

class GrounderClient {
public:
    virtual ~GrounderClient() = default;
    virtual GroundResponse ground(const GroundRequest& request) = 0;
};

class InpainterClient {
public:
    virtual ~InpainterClient() = default;
    virtual InpaintResponse inpaint(const InpaintRequest& request) = 0;
};

class SelectorClient {
public:
    virtual ~SelectorClient() = default;
    virtual SelectResponse select(const SelectRequest& request) = 0;
};

struct ServiceContracts {
    std::shared_ptr<ClassifierClient> classifier;
    std::shared_ptr<GrounderClient> grounder;
    std::shared_ptr<InpainterClient> inpainter;
    std::shared_ptr<SelectorClient> selector;  // needed by the Local strategy only
};

} // namespace cce
