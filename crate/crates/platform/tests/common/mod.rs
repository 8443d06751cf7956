#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use avabond_core::Timestamp;
use avabond_platform::client::ApiClient;
use avabond_platform::{ManualClock, PlatformConfig, Service, ServiceOptions};

pub const START: Timestamp = Timestamp(1_767_571_200_000);
pub const TOKEN: &str = "operator-secret";

pub struct Server {
    pub base: String,
    pub service: Arc<Service>,
    pub clock: Arc<ManualClock>,
    pub task: tokio::task::JoinHandle<()>,
}

impl Server {
    pub fn client(&self) -> ApiClient {
        ApiClient::new(&self.base).with_operator_token(TOKEN)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.task.abort();
    }
}

pub fn open(dir: &Path, config: PlatformConfig, clock: Arc<ManualClock>) -> Arc<Service> {
    let mut options = ServiceOptions::new(dir);
    options.config = config;
    options.operator_token = Some(TOKEN.into());
    let (service, _) = Service::open(options, clock).unwrap();
    Arc::new(service)
}

pub async fn spawn(dir: &Path, config: PlatformConfig) -> Server {
    let clock = Arc::new(ManualClock::new(START));
    let service = open(dir, config, clock.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let served = service.clone();
    let task = tokio::spawn(async move {
        avabond_platform::api::serve(listener, served).await.unwrap();
    });
    Server { base, service, clock, task }
}

pub fn fast_config() -> PlatformConfig {
    PlatformConfig { fsync: false, ..PlatformConfig::default() }
}
