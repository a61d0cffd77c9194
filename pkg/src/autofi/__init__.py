"""autofi: fault test cases from safety requirements, executed on a
simulated vehicle plant over a virtual signal bus.

The toolkit covers three phases: generation (classify requirements,
generate fault locations via an LLM provider or fixture replay),
execution (golden and faulty simulation runs with black-box signal
interposition) and analysis (metrics, golden-run differencing, reports
and figures).
"""

__version__ = "0.1.0"
