//! HTTP client construction and host resolution shared by the driver and the auditor.

use std::collections::HashMap;
use std::io;
use std::net::{IpAddr, SocketAddr};
use std::sync::Arc;

use reqwest::dns::{Addrs, Name, Resolve, Resolving};

/// How host names are turned into socket addresses.
///
/// A static table maps names to full socket addresses (port included), which
/// is how every fixture host lands on the single loopback listener.
#[derive(Debug, Clone, Default)]
pub enum HostResolver {
    #[default]
    System,
    Static {
        table: HashMap<String, SocketAddr>,
        /// Names missing from the table fail instead of falling back to the system.
        strict: bool,
    },
}

impl HostResolver {
    pub fn strict(table: HashMap<String, SocketAddr>) -> Self {
        HostResolver::Static {
            table,
            strict: true,
        }
    }

    pub async fn lookup(&self, host: &str) -> io::Result<Vec<SocketAddr>> {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let bare = host.trim_start_matches('[').trim_end_matches(']');
        if let Ok(ip) = bare.parse::<IpAddr>() {
            return Ok(vec![SocketAddr::new(ip, 0)]);
        }
        if let HostResolver::Static { table, strict } = self {
            if let Some(addr) = table.get(&host) {
                return Ok(vec![*addr]);
            }
            if *strict {
                return Err(io::Error::new(
                    io::ErrorKind::NotFound,
                    format!("no address for host {host}"),
                ));
            }
        }
        let addrs: Vec<SocketAddr> = tokio::net::lookup_host((host.as_str(), 0)).await?.collect();
        if addrs.is_empty() {
            return Err(io::Error::new(
                io::ErrorKind::NotFound,
                format!("no address for host {host}"),
            ));
        }
        Ok(addrs)
    }
}

struct ResolverAdapter(Arc<HostResolver>);

impl Resolve for ResolverAdapter {
    fn resolve(&self, name: Name) -> Resolving {
        let resolver = self.0.clone();
        let host = name.as_str().to_owned();
        Box::pin(async move {
            let addrs = resolver.lookup(&host).await?;
            Ok(Box::new(addrs.into_iter()) as Addrs)
        })
    }
}

/// A client that never follows redirects on its own and resolves through `resolver`.
pub fn build_client(resolver: Arc<HostResolver>) -> reqwest::Result<reqwest::Client> {
    reqwest::Client::builder()
        .redirect(reqwest::redirect::Policy::none())
        .dns_resolver(Arc::new(ResolverAdapter(resolver)))
        .user_agent(concat!("gptaudit/", env!("CARGO_PKG_VERSION")))
        .build()
}
