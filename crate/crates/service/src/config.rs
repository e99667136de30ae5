use std::net::SocketAddr;
use std::path::PathBuf;

/// Service settings; every flag can also be set through a `FORGE_*` environment variable.
#[derive(Debug, Clone, clap::Args)]
pub struct ServiceConfig {
    #[arg(long, env = "FORGE_HOST", default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "FORGE_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Directory for session snapshots; sessions are memory-only when unset.
    #[arg(long, env = "FORGE_SNAPSHOT_DIR")]
    pub snapshot_dir: Option<PathBuf>,
    /// Uploads with more vertices are rejected with 413.
    #[arg(long, env = "FORGE_MAX_VERTICES", default_value_t = 200_000)]
    pub max_vertices: usize,
    #[arg(long, env = "FORGE_MAX_UPLOAD_BYTES", default_value_t = 256 << 20)]
    pub max_upload_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            snapshot_dir: None,
            max_vertices: 200_000,
            max_upload_bytes: 256 << 20,
        }
    }
}

impl ServiceConfig {
    pub fn addr(&self) -> std::io::Result<SocketAddr> {
        use std::net::ToSocketAddrs;
        (self.host.as_str(), self.port)
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "no address"))
    }
}
