//! Pull predictions for two models from an HTTP prediction service in
//! batches. A toy in-process server stands in for the real provider.
//!
//!     cargo run --example remote_fetch

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;

use coe::cli::remote::{
    fetch_remote_predictions, FetchOptions, PredictRequest, PredictResponse, RemotePrediction,
    RemoteProviderEndpoint,
};
use coe::dataset::Label;

// Answers every request with label = (id * model digit) mod 4 and a fixed score.
fn serve(listener: TcpListener) {
    for stream in listener.incoming() {
        let Ok(mut stream) = stream else { continue };
        std::thread::spawn(move || {
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    return;
                }
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let req: PredictRequest = serde_json::from_slice(&body).unwrap();
            let k: u32 = req.model_id[1..].parse().unwrap();
            let resp = PredictResponse {
                predictions: req
                    .example_ids
                    .iter()
                    .map(|id| RemotePrediction {
                        example_id: id.clone(),
                        label: id.parse::<u32>().unwrap() * k % 4,
                        score: Some(0.9),
                    })
                    .collect(),
            };
            let out = serde_json::to_vec(&resp).unwrap();
            let head = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                out.len()
            );
            stream.write_all(head.as_bytes()).unwrap();
            stream.write_all(&out).unwrap();
        });
    }
}

fn main() -> coe::Result<()> {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || serve(listener));

    let endpoint = RemoteProviderEndpoint::new(&format!("http://{addr}"), 2000)?;
    let models = vec!["m1".to_string(), "m3".to_string()];
    let ids: Vec<String> = (0..10).map(|i| i.to_string()).collect();
    let fetched = fetch_remote_predictions(
        &endpoint,
        &models,
        &ids,
        4,
        FetchOptions {
            batch_size: 4,
            concurrent: true,
        },
    )?;
    let truth = (0..10).map(|i| Label(i % 4)).collect();
    let table = fetched.into_table(4, truth)?;
    print!("{}", table.to_csv_string());
    println!(
        "accuracy m1 {:.1}, m3 {:.1}",
        table.accuracy(0),
        table.accuracy(1)
    );
    Ok(())
}
