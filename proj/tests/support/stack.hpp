#pragma once

#include <memory>
#include <string>

#include "clipportal/headless_client.hpp"
#include "clipportal/portal_server.hpp"
#include "clipportal/testbed.hpp"
#include "test_env.hpp"

namespace clipportal::oracle {

struct StackOptions {
  std::size_t page_bytes = 1024;
  bool relay = false;
  bool tls = false;
  std::string vault_site_pass = "s3cret";  // password stored in the vault for the grades site
  std::string listen_host;                  // empty keeps the config default
};

/// Testbed sites plus a portal server configured for the three-portlet
/// "campus" portal.
struct Stack {
  explicit Stack(StackOptions options = {});
  ~Stack();

  std::unique_ptr<client::ClientSession> session();

  TempDir dir{"stack"};
  testbed::Testbed sites;
  testbed::DemoFiles files;
  server::ServerConfig config;
  std::unique_ptr<server::PortalServer> server;
};

}  // namespace clipportal::oracle
